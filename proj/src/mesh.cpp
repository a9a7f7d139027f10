#include "slag/mesh.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace slag {

namespace {

constexpr double kDegeneracyTol = 1e-12;  // vol < tol * (longest edge)^n rejects

std::vector<int> unionFindInit(int n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    return p;
}

int ufFind(std::vector<int>& p, int a) {
    while (p[a] != a) {
        p[a] = p[p[a]];
        a = p[a];
    }
    return a;
}

void ufUnion(std::vector<int>& p, int a, int b) { p[ufFind(p, a)] = ufFind(p, b); }

}  // namespace

int sortParity(std::vector<int>& tuple) {
    int sign = 1;
    for (size_t i = 0; i < tuple.size(); ++i)
        for (size_t j = i + 1; j < tuple.size(); ++j) {
            if (tuple[i] == tuple[j]) return 0;
            if (tuple[i] > tuple[j]) {
                std::swap(tuple[i], tuple[j]);
                sign = -sign;
            }
        }
    return sign;
}

CellComplex CellComplex::build(const std::vector<std::vector<int>>& topCells,
                               int vertexSeedCount) {
    CellComplex cx;
    if (topCells.empty()) throw ValidationError("mesh: complex has no cells");
    cx.dim = static_cast<int>(topCells.front().size()) - 1;
    cx.faces.resize(cx.dim + 1);
    cx.index.resize(cx.dim + 1);
    for (int v = 0; v < vertexSeedCount && cx.dim > 0; ++v) {
        cx.index[0].emplace(std::vector<int>{v}, v);
        cx.faces[0].push_back({v});
    }

    cx.parity.reserve(topCells.size());
    for (const auto& cell : topCells) {
        std::vector<int> sorted = cell;
        int s = sortParity(sorted);
        if (s == 0) throw ValidationError("mesh: repeated vertex in a cell");
        cx.parity.push_back(s);
        cx.index[cx.dim].emplace(sorted, static_cast<int>(cx.faces[cx.dim].size()));
        cx.faces[cx.dim].push_back(sorted);
    }
    if (cx.index[cx.dim].size() != topCells.size())
        throw ValidationError("mesh: duplicate top cell");

    // Enumerate lower faces degree by degree.
    for (int k = cx.dim - 1; k >= 0; --k) {
        for (const auto& f : cx.faces[k + 1]) {
            for (size_t drop = 0; drop < f.size(); ++drop) {
                std::vector<int> sub;
                sub.reserve(f.size() - 1);
                for (size_t j = 0; j < f.size(); ++j)
                    if (j != drop) sub.push_back(f[j]);
                if (cx.index[k].emplace(sub, static_cast<int>(cx.faces[k].size())).second)
                    cx.faces[k].push_back(sub);
            }
        }
    }

    // Coboundary matrices.  The top-degree one carries the input parity.
    cx.d.resize(cx.dim);
    for (int k = 0; k < cx.dim; ++k) {
        std::vector<Eigen::Triplet<double>> trips;
        for (int r = 0; r < cx.count(k + 1); ++r) {
            const auto& f = cx.faces[k + 1][r];
            double cellSign = (k + 1 == cx.dim) ? cx.parity[r] : 1.0;
            double s = 1.0;
            for (size_t drop = 0; drop < f.size(); ++drop, s = -s) {
                std::vector<int> sub;
                sub.reserve(f.size() - 1);
                for (size_t j = 0; j < f.size(); ++j)
                    if (j != drop) sub.push_back(f[j]);
                trips.emplace_back(r, cx.index[k].at(sub), cellSign * s);
            }
        }
        cx.d[k].resize(cx.count(k + 1), cx.count(k));
        cx.d[k].setFromTriplets(trips.begin(), trips.end());
    }
    return cx;
}

std::pair<int, int> CellComplex::locate(int k, std::vector<int> tuple) const {
    int s = sortParity(tuple);
    if (s == 0) return {-1, 0};
    auto it = index[k].find(tuple);
    if (it == index[k].end()) return {-1, 0};
    if (k == dim) s *= parity[it->second];
    return {it->second, s};
}

SimplicialPatch SimplicialPatch::fromData(int n, Mat verts, Eigen::MatrixXi simp) {
    SimplicialPatch M;
    M.n = n;
    M.vertices = std::move(verts);
    M.simplices = std::move(simp);

    const int V = M.vertexCount();
    const int S = M.simplexCount();
    if (n < 1 || M.ambientDim() != 2 * n)
        throw ValidationError("mesh.load_mesh: ambient dimension must equal 2n");
    if (M.simplices.cols() != n + 1)
        throw ValidationError("mesh.load_mesh: simplices must have n+1 vertices");
    if (!M.vertices.allFinite())
        throw ValidationError("mesh.load_mesh: non-finite vertex coordinates");

    std::vector<std::vector<int>> cells(S);
    for (int i = 0; i < S; ++i) {
        cells[i].resize(n + 1);
        for (int j = 0; j <= n; ++j) {
            int v = M.simplices(i, j);
            if (v < 0 || v >= V)
                throw ValidationError("mesh.load_mesh: vertex index out of range in simplex " +
                                      std::to_string(i));
            cells[i][j] = v;
        }
    }
    M.complex = CellComplex::build(cells, V);

    // Non-degeneracy, scale-invariant: vol >= tol * (longest edge)^n.
    for (int i = 0; i < S; ++i) {
        Mat pts = M.facePoints(n, i);
        double h = longestEdge(pts);
        if (simplexVolume(pts) < kDegeneracyTol * std::pow(h, n) || h == 0.0)
            throw ValidationError("mesh.load_mesh: degenerate simplex " + std::to_string(i));
    }

    // Manifold-with-boundary: every (n-1)-face has 1 or 2 cofaces, and the two
    // cofaces of an interior face induce opposite orientations.
    const SparseMat& dTop = M.complex.d[n - 1];
    std::vector<int> cofaceCount(M.faceCount(n - 1), 0);
    std::vector<double> inducedSum(M.faceCount(n - 1), 0.0);
    std::vector<int> lastCoface(M.faceCount(n - 1), -1);
    for (int c = 0; c < dTop.cols(); ++c) {
        for (SparseMat::InnerIterator it(dTop, c); it; ++it) {
            cofaceCount[c] += 1;
            inducedSum[c] += it.value();
            lastCoface[c] = static_cast<int>(it.row());
        }
    }
    for (int f = 0; f < M.faceCount(n - 1); ++f) {
        if (cofaceCount[f] == 0 || cofaceCount[f] > 2)
            throw ValidationError("mesh.load_mesh: non-manifold face shared by " +
                                  std::to_string(cofaceCount[f]) + " simplices (face " +
                                  std::to_string(f) + ")");
        if (cofaceCount[f] == 2 && inducedSum[f] != 0.0)
            throw ValidationError(
                "mesh.load_mesh: non-orientable configuration at face " + std::to_string(f) +
                " (simplex " + std::to_string(lastCoface[f]) + ")");
        if (cofaceCount[f] == 1) {
            M.boundaryFaces.push_back(f);
            M.boundarySign.push_back(static_cast<int>(inducedSum[f]));
        }
    }

    // Connectedness (the deformation theory assumes a connected patch), and
    // every vertex must belong to some simplex.
    std::vector<int> uf = unionFindInit(V);
    std::vector<bool> used(V, false);
    for (int i = 0; i < S; ++i)
        for (int j = 0; j <= n; ++j) {
            used[M.simplices(i, j)] = true;
            ufUnion(uf, M.simplices(i, 0), M.simplices(i, j));
        }
    for (int v = 0; v < V; ++v)
        if (!used[v])
            throw ValidationError("mesh.load_mesh: vertex " + std::to_string(v) +
                                  " belongs to no simplex");
    int root = ufFind(uf, 0);
    for (int v = 0; v < V; ++v)
        if (ufFind(uf, v) != root)
            throw ValidationError("mesh.load_mesh: patch is disconnected");

    std::vector<bool> onBoundary(V, false);
    for (int f : M.boundaryFaces)
        for (int v : M.complex.faces[n - 1][f]) onBoundary[v] = true;
    for (int v = 0; v < V; ++v)
        if (onBoundary[v]) M.boundaryVertices.push_back(v);

    return M;
}

Mat SimplicialPatch::facePoints(int k, int id) const {
    const auto& f = complex.faces[k][id];
    Mat pts(static_cast<int>(f.size()), ambientDim());
    for (size_t j = 0; j < f.size(); ++j) pts.row(static_cast<int>(j)) = vertices.row(f[j]);
    return pts;
}

double SimplicialPatch::faceVolume(int k, int id) const { return simplexVolume(facePoints(k, id)); }

double SimplicialPatch::meshSize() const {
    double h = 0.0;
    for (int e = 0; e < faceCount(1); ++e) h = std::max(h, faceVolume(1, e));
    return h;
}

CellComplex SimplicialPatch::boundaryComplex() const {
    std::vector<std::vector<int>> cells;
    cells.reserve(boundaryFaces.size());
    for (size_t i = 0; i < boundaryFaces.size(); ++i) {
        std::vector<int> f = complex.faces[n - 1][boundaryFaces[i]];
        if (boundarySign[i] < 0 && f.size() >= 2) std::swap(f[0], f[1]);
        cells.push_back(f);
    }
    return CellComplex::build(cells);
}

std::vector<int> SimplicialPatch::boundaryComponents() const {
    const int B = static_cast<int>(boundaryFaces.size());
    std::vector<int> uf = unionFindInit(B);
    std::map<int, std::vector<int>> byVertex;
    for (int i = 0; i < B; ++i)
        for (int v : complex.faces[n - 1][boundaryFaces[i]]) byVertex[v].push_back(i);
    for (const auto& [v, ids] : byVertex)
        for (size_t j = 1; j < ids.size(); ++j) ufUnion(uf, ids[0], ids[j]);
    std::map<int, int> relabel;
    std::vector<int> comp(B);
    for (int i = 0; i < B; ++i) {
        int r = ufFind(uf, i);
        auto [it, fresh] = relabel.emplace(r, static_cast<int>(relabel.size()));
        comp[i] = it->second;
    }
    return comp;
}

SimplicialPatch SimplicialPatch::withVertices(Mat newVertices) const {
    if (newVertices.rows() != vertices.rows() || newVertices.cols() != vertices.cols())
        throw ValidationError("mesh: vertex matrix shape mismatch");
    SimplicialPatch M = *this;
    M.vertices = std::move(newVertices);
    for (int i = 0; i < M.simplexCount(); ++i) {
        Mat pts = M.facePoints(n, i);
        double h = longestEdge(pts);
        if (simplexVolume(pts) < kDegeneracyTol * std::pow(h, n) || h == 0.0)
            throw ValidationError("mesh: deformation degenerated simplex " + std::to_string(i));
    }
    return M;
}

int BoundaryData::indexOf(int vertexId) const {
    auto it = std::lower_bound(vertexIds.begin(), vertexIds.end(), vertexId);
    if (it == vertexIds.end() || *it != vertexId) return -1;
    return static_cast<int>(it - vertexIds.begin());
}

BoundaryData boundaryData(const SimplicialPatch& M) {
    if (!M.hasBoundary())
        throw ValidationError("mesh.boundary_data: empty boundary");
    const int n = M.n;
    const int D = M.ambientDim();

    BoundaryData B;
    B.vertexIds = M.boundaryVertices;
    const int nb = static_cast<int>(B.vertexIds.size());
    B.normals = Mat::Zero(nb, D);
    B.boundaryTangents = Mat::Zero(nb, D);
    B.componentOfVertex.assign(nb, -1);

    std::vector<Mat> tangents = vertexTangentBases(M);
    std::vector<int> faceComp = M.boundaryComponents();

    // Locate the unique coface of each boundary face.
    const SparseMat& dTop = M.complex.d[n - 1];
    std::vector<int> coface(M.faceCount(n - 1), -1);
    for (int c = 0; c < dTop.cols(); ++c)
        for (SparseMat::InnerIterator it(dTop, c); it; ++it) coface[c] = static_cast<int>(it.row());

    for (size_t bi = 0; bi < M.boundaryFaces.size(); ++bi) {
        int f = M.boundaryFaces[bi];
        const auto& fverts = M.complex.faces[n - 1][f];
        int sigma = coface[f];
        const auto& sverts = M.complex.faces[n][sigma];

        Mat fpts = M.facePoints(n - 1, f);
        double w = (n >= 2) ? simplexVolume(fpts) : 1.0;

        // In-simplex normal: the vertex of sigma opposite to f, with the
        // face-tangent components removed.
        int opp = -1;
        for (int v : sverts)
            if (std::find(fverts.begin(), fverts.end(), v) == fverts.end()) opp = v;
        Vec dir = M.vertices.row(opp) - fpts.row(0);
        if (n >= 2) {
            Eigen::JacobiSVD<Mat> svd(
                (fpts.bottomRows(n - 1).rowwise() - fpts.row(0)).transpose(), Eigen::ComputeThinU);
            Mat U = svd.matrixU();
            dir -= U * (U.transpose() * dir);
        }
        if (dir.norm() > 0.0) dir.normalize();

        // Oriented rim direction (degree-1 boundary cells only exist at n = 2;
        // higher n keeps the averaged-tangent projector route).
        Vec rimDir = Vec::Zero(D);
        if (n == 2) {
            rimDir = M.vertices.row(fverts[1]) - M.vertices.row(fverts[0]);
            rimDir *= static_cast<double>(M.boundarySign[bi]);
        }

        for (int v : fverts) {
            int row = B.indexOf(v);
            B.normals.row(row) += w * dir.transpose();
            B.boundaryTangents.row(row) += w * rimDir.transpose();
            B.componentOfVertex[row] = faceComp[bi];
        }
    }

    for (int row = 0; row < nb; ++row) {
        int v = B.vertexIds[row];
        // Project onto the averaged tangent plane of L at v, then remove the
        // averaged rim direction and normalize.
        const Mat& T = tangents[v];
        Vec nvec = T * (T.transpose() * Vec(B.normals.row(row)));
        Vec t = B.boundaryTangents.row(row);
        if (t.norm() > 0.0) {
            t.normalize();
            nvec -= t * t.dot(nvec);
        }
        double len = nvec.norm();
        if (len < 1e-14)
            throw ValidationError("mesh.boundary_data: vanishing inward normal at vertex " +
                                  std::to_string(v));
        B.normals.row(row) = nvec.transpose() / len;
        B.boundaryTangents.row(row) = t.transpose();
    }
    return B;
}

std::pair<int, int> bettiNumbers(const SimplicialPatch& M) {
    auto rankOf = [](const SparseMat& A) {
        if (A.rows() == 0 || A.cols() == 0) return 0;
        Mat D = Mat(A);
        Eigen::BDCSVD<Mat> svd(D);
        const auto& sv = svd.singularValues();
        double thresh = 1e-9 * sv(0);
        int r = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > thresh) ++r;
        return r;
    };
    int r0 = rankOf(M.complex.d[0]);
    int b0 = M.faceCount(0) - r0;
    int b1 = 0;
    if (M.n >= 2) {
        int r1 = rankOf(M.complex.d[1]);
        b1 = M.faceCount(1) - r1 - r0;
    }
    return {b0, b1};
}

Cochain volumeCochain(const SimplicialPatch& M) {
    Vec v(M.simplexCount());
    for (int i = 0; i < M.simplexCount(); ++i) v[i] = M.faceVolume(M.n, i);
    return Cochain(M.n, v);
}

double integrateTop(const SimplicialPatch& M, const Cochain& c) {
    if (c.degree != M.n)
        throw ValidationError("dec.integrate: cochain degree must equal n");
    return c.values.sum();
}

double valueOn(const SimplicialPatch& M, const Cochain& c, std::vector<int> tuple) {
    auto [id, sign] = M.complex.locate(c.degree, std::move(tuple));
    if (id < 0)
        throw ValidationError("mesh: tuple is not a face of the patch");
    return sign * c.values[id];
}

std::vector<Mat> vertexTangentBases(const SimplicialPatch& M) {
    const int D = M.ambientDim();
    const int V = M.vertexCount();
    std::vector<Mat> proj(V, Mat::Zero(D, D));
    for (int i = 0; i < M.simplexCount(); ++i) {
        Mat pts = M.facePoints(M.n, i);
        Mat E(D, M.n);
        for (int c = 0; c < M.n; ++c) E.col(c) = pts.row(c + 1) - pts.row(0);
        Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeThinU);
        Mat U = svd.matrixU();
        Mat P = U * U.transpose();
        double w = simplexVolume(pts);
        for (int j = 0; j <= M.n; ++j) proj[M.simplices(i, j)] += w * P;
    }
    std::vector<Mat> bases(V);
    for (int v = 0; v < V; ++v) {
        Eigen::SelfAdjointEigenSolver<Mat> eig(proj[v]);
        // Eigenvalues ascending: the top n eigenvectors span the tangent plane.
        bases[v] = eig.eigenvectors().rightCols(M.n);
    }
    return bases;
}

namespace {

std::vector<std::string> contentLines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        bool blank = line.find_first_not_of(" \t\r\n") == std::string::npos;
        if (!blank) lines.push_back(line);
    }
    return lines;
}

}  // namespace

SimplicialPatch parseMesh(std::istream& in, const std::string& name) {
    auto lines = contentLines(in);
    if (lines.empty())
        throw ParseError("mesh.load_mesh: " + name + ": empty file");
    std::istringstream head(lines[0]);
    std::string magic;
    int n = 0, V = 0, S = 0;
    head >> magic >> n >> V >> S;
    if (head.fail() || magic != "slmesh")
        throw ParseError("mesh.load_mesh: " + name + ": bad header (expected 'slmesh n V S')");
    if (n < 1 || V < 1 || S < 1)
        throw ParseError("mesh.load_mesh: " + name + ": non-positive counts in header");
    if (static_cast<int>(lines.size()) != 1 + V + S)
        throw ParseError("mesh.load_mesh: " + name + ": expected " + std::to_string(V + S) +
                         " data lines, found " + std::to_string(lines.size() - 1));

    Mat verts(V, 2 * n);
    for (int i = 0; i < V; ++i) {
        std::istringstream ls(lines[1 + i]);
        for (int j = 0; j < 2 * n; ++j) {
            if (!(ls >> verts(i, j)))
                throw ParseError("mesh.load_mesh: " + name + ": bad vertex line " +
                                 std::to_string(i));
        }
    }
    Eigen::MatrixXi simp(S, n + 1);
    for (int i = 0; i < S; ++i) {
        std::istringstream ls(lines[1 + V + i]);
        for (int j = 0; j <= n; ++j) {
            if (!(ls >> simp(i, j)))
                throw ParseError("mesh.load_mesh: " + name + ": bad simplex line " +
                                 std::to_string(i));
        }
    }
    return SimplicialPatch::fromData(n, std::move(verts), std::move(simp));
}

SimplicialPatch loadMesh(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("mesh.load_mesh: cannot open '" + path + "'");
    return parseMesh(in, path);
}

void saveMesh(const SimplicialPatch& M, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ParseError("mesh.save_mesh: cannot open '" + path + "' for writing");
    out << "slmesh " << M.n << " " << M.vertexCount() << " " << M.simplexCount() << "\n";
    char buf[64];
    for (int i = 0; i < M.vertexCount(); ++i) {
        for (int j = 0; j < M.ambientDim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", M.vertices(i, j));
            out << (j ? " " : "") << buf;
        }
        out << "\n";
    }
    for (int i = 0; i < M.simplexCount(); ++i) {
        for (int j = 0; j <= M.n; ++j) out << (j ? " " : "") << M.simplices(i, j);
        out << "\n";
    }
}

}  // namespace slag
