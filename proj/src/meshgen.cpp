#include "slag/meshgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

namespace slag {

namespace {

struct PlaneMeshBuilder {
    std::vector<std::array<double, 2>> pts;
    std::vector<std::array<int, 3>> tris;

    int addPoint(double u, double v) {
        pts.push_back({u, v});
        return static_cast<int>(pts.size()) - 1;
    }

    void addTriangle(int a, int b, int c) { tris.push_back({a, b, c}); }

    // Counterclockwise quad (a, b, c, d) split into four triangles around its
    // centroid.
    void addCrossedQuad(int a, int b, int c, int d) {
        int m = addPoint((pts[a][0] + pts[b][0] + pts[c][0] + pts[d][0]) / 4.0,
                         (pts[a][1] + pts[b][1] + pts[c][1] + pts[d][1]) / 4.0);
        addTriangle(a, b, m);
        addTriangle(b, c, m);
        addTriangle(c, d, m);
        addTriangle(d, a, m);
    }

    SimplicialPatch build() const {
        Mat verts(static_cast<int>(pts.size()), 4);
        for (size_t i = 0; i < pts.size(); ++i) {
            verts(static_cast<int>(i), 0) = pts[i][0];
            verts(static_cast<int>(i), 1) = 0.0;
            verts(static_cast<int>(i), 2) = pts[i][1];
            verts(static_cast<int>(i), 3) = 0.0;
        }
        Eigen::MatrixXi simp(static_cast<int>(tris.size()), 3);
        for (size_t i = 0; i < tris.size(); ++i)
            for (int j = 0; j < 3; ++j) simp(static_cast<int>(i), j) = tris[i][j];
        return SimplicialPatch::fromData(2, std::move(verts), std::move(simp));
    }
};

SimplicialPatch genDisk(int res) {
    const int s = res;
    const int nb = std::max(1, res / 8);
    PlaneMeshBuilder B;
    int center = B.addPoint(0.0, 0.0);
    std::vector<std::vector<int>> rings(nb + 1);
    for (int j = 1; j <= nb; ++j) {
        double r = static_cast<double>(j) / nb;
        for (int k = 0; k < s; ++k) {
            double a = 2.0 * M_PI * k / s;
            rings[j].push_back(B.addPoint(r * std::cos(a), r * std::sin(a)));
        }
    }
    for (int k = 0; k < s; ++k)
        B.addTriangle(center, rings[1][k], rings[1][(k + 1) % s]);
    for (int j = 1; j < nb; ++j)
        for (int k = 0; k < s; ++k) {
            int k1 = (k + 1) % s;
            B.addCrossedQuad(rings[j][k], rings[j + 1][k], rings[j + 1][k1], rings[j][k1]);
        }
    return B.build();
}

SimplicialPatch genAnnulus(int res) {
    const int s = res;
    const int nb = std::max(1, res / 8);
    PlaneMeshBuilder B;
    std::vector<std::vector<int>> rings(nb + 1);
    for (int j = 0; j <= nb; ++j) {
        double r = 1.0 + static_cast<double>(j) / nb;
        for (int k = 0; k < s; ++k) {
            double a = 2.0 * M_PI * k / s;
            rings[j].push_back(B.addPoint(r * std::cos(a), r * std::sin(a)));
        }
    }
    for (int j = 0; j < nb; ++j)
        for (int k = 0; k < s; ++k) {
            int k1 = (k + 1) % s;
            B.addCrossedQuad(rings[j][k], rings[j + 1][k], rings[j + 1][k1], rings[j][k1]);
        }
    return B.build();
}

SimplicialPatch genPants(int res) {
    if (res < 8)
        throw ValidationError("cli.generate_mesh: pants needs resolution >= 8 to cut holes");
    const int w = std::max(1, res / 8);
    const int ax1 = res / 4 - w / 2;
    const int ax2 = 3 * res / 4 - w / 2;
    const int ay = res / 2 - w / 2;
    auto inHole = [&](int i, int j) {
        bool inY = j >= ay && j < ay + w;
        return inY && ((i >= ax1 && i < ax1 + w) || (i >= ax2 && i < ax2 + w));
    };

    PlaneMeshBuilder B;
    std::map<std::pair<int, int>, int> corner;
    auto cornerId = [&](int i, int j) {
        auto [it, fresh] = corner.emplace(std::make_pair(i, j), -1);
        if (fresh)
            it->second = B.addPoint(static_cast<double>(i) / res, static_cast<double>(j) / res);
        return it->second;
    };
    for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
            if (inHole(i, j)) continue;
            int a = cornerId(i, j);
            int b = cornerId(i + 1, j);
            int c = cornerId(i + 1, j + 1);
            int d = cornerId(i, j + 1);
            B.addCrossedQuad(a, b, c, d);
        }
    return B.build();
}

}  // namespace

SimplicialPatch generateMesh(const std::string& shape, int resolution) {
    if (resolution < 4)
        throw ValidationError("cli.generate_mesh: resolution must be at least 4");
    if (shape == "disk") return genDisk(resolution);
    if (shape == "annulus") return genAnnulus(resolution);
    if (shape == "pants") return genPants(resolution);
    throw ValidationError("cli.generate_mesh: unknown shape '" + shape +
                          "' (expected disk, annulus or pants)");
}

SimplicialPatch refineRandom(const SimplicialPatch& M, int count, std::mt19937_64& rng) {
    if (M.n != 2)
        throw ValidationError("cli.generate_mesh: refinement implemented for surfaces only");
    const int S = M.simplexCount();
    count = std::min(count, S);
    std::vector<int> ids(S);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(count);
    std::sort(ids.begin(), ids.end());

    const int V = M.vertexCount();
    Mat verts(V + count, M.ambientDim());
    verts.topRows(V) = M.vertices;
    std::vector<std::array<int, 3>> tris;
    int next = V;
    size_t cursor = 0;
    for (int i = 0; i < S; ++i) {
        int a = M.simplices(i, 0), b = M.simplices(i, 1), c = M.simplices(i, 2);
        if (cursor < ids.size() && ids[cursor] == i) {
            verts.row(next) = (M.vertices.row(a) + M.vertices.row(b) + M.vertices.row(c)) / 3.0;
            tris.push_back({a, b, next});
            tris.push_back({b, c, next});
            tris.push_back({c, a, next});
            ++next;
            ++cursor;
        } else {
            tris.push_back({a, b, c});
        }
    }
    Eigen::MatrixXi simp(static_cast<int>(tris.size()), 3);
    for (size_t i = 0; i < tris.size(); ++i)
        for (int j = 0; j < 3; ++j) simp(static_cast<int>(i), j) = tris[i][j];
    return SimplicialPatch::fromData(M.n, std::move(verts), std::move(simp));
}

}  // namespace slag
