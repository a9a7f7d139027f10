#include "slag/dec.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace slag {

namespace {

// Orthonormal in-plane basis of a simplex (columns), via thin SVD of edges.
Mat planeBasis(const Mat& pts) {
    const int k = static_cast<int>(pts.rows()) - 1;
    Mat E(pts.cols(), k);
    for (int c = 0; c < k; ++c) E.col(c) = pts.row(c + 1) - pts.row(0);
    Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeThinU);
    return svd.matrixU();
}

// Circumcenter of a triangle, in ambient coordinates.
Vec circumcenter(const Mat& pts) {
    Mat U = planeBasis(pts);
    Eigen::Vector2d a1 = U.transpose() * Vec(pts.row(1) - pts.row(0));
    Eigen::Vector2d a2 = U.transpose() * Vec(pts.row(2) - pts.row(0));
    Eigen::Matrix2d A;
    A.row(0) = 2.0 * a1.transpose();
    A.row(1) = 2.0 * a2.transpose();
    Eigen::Vector2d rhs(a1.squaredNorm(), a2.squaredNorm());
    Eigen::Vector2d x = A.partialPivLu().solve(rhs);
    return Vec(pts.row(0)) + U * x;
}

// Signed area of a polygon given in 2D plane coordinates.
double shoelace(const std::vector<Eigen::Vector2d>& poly) {
    double a = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
}

Vec barycenter(const Mat& pts) { return pts.colwise().mean(); }

}  // namespace

void DecOperators::checkDegree(const Cochain& c, int k, const char* op) const {
    if (c.degree != k)
        throw ValidationError(std::string("dec.") + op + ": expected degree " + std::to_string(k) +
                              ", got " + std::to_string(c.degree));
    if (c.values.size() != M_->faceCount(c.degree))
        throw ValidationError(std::string("dec.") + op + ": cochain size mismatch");
}

int DecOperators::starStarSign(int k) const {
    return ((k * (M_->n - k)) % 2 == 0) ? 1 : -1;
}

DecOperators DecOperators::build(const SimplicialPatch& M) {
    DecOperators dec;
    dec.M_ = &M;
    const int n = M.n;

    // --- Circumcentric dual for strictly well-centered surfaces.
    bool circOk = false;
    std::vector<Vec> circStars;
    SparseMat circCorners;
    if (n == 2) {
        const int V = M.faceCount(0), E = M.faceCount(1), S = M.faceCount(2);
        Vec s0 = Vec::Zero(V), s1 = Vec::Zero(E), s2(S);
        std::vector<Eigen::Triplet<double>> corners;
        circOk = true;
        for (int t = 0; t < S && circOk; ++t) {
            Mat pts = M.facePoints(2, t);
            double area = simplexVolume(pts);
            s2[t] = 1.0 / area;
            Vec cc = circumcenter(pts);
            Mat U = planeBasis(pts);

            const auto& tri = M.complex.faces[2][t];
            double cornerSum = 0.0;
            for (int j = 0; j < 3; ++j) {
                int v = tri[j];
                int u1 = tri[(j + 1) % 3], u2 = tri[(j + 2) % 3];
                Vec pv = M.vertices.row(v);
                Vec m1 = 0.5 * (M.vertices.row(v) + M.vertices.row(u1));
                Vec m2 = 0.5 * (M.vertices.row(v) + M.vertices.row(u2));
                auto loc = [&](const Vec& p) {
                    return Eigen::Vector2d(U.col(0).dot(p - pv), U.col(1).dot(p - pv));
                };
                double corner = std::abs(shoelace({loc(pv), loc(m1), loc(cc), loc(m2)}));
                corners.emplace_back(v, t, corner);
                s0[v] += corner;
                cornerSum += corner;
            }
            // The three corner quads must tile the triangle exactly; an
            // escaped circumcenter makes them overlap instead.
            if (std::abs(cornerSum - area) > 1e-9 * area) circOk = false;

            // Signed dual edge pieces: distance from edge midpoint to the
            // circumcenter, positive only when the center is inside.
            for (int j = 0; j < 3 && circOk; ++j) {
                int a = tri[j], b = tri[(j + 1) % 3], opp = tri[(j + 2) % 3];
                std::vector<int> key{std::min(a, b), std::max(a, b)};
                int e = M.complex.index[1].at(key);
                Vec m = 0.5 * (M.vertices.row(a) + M.vertices.row(b));
                Vec inward = Vec(M.vertices.row(opp)) - m;
                Vec edgeDir = M.vertices.row(b) - M.vertices.row(a);
                inward -= edgeDir * (edgeDir.dot(inward) / edgeDir.squaredNorm());
                double len = inward.norm();
                if (len == 0.0) {
                    circOk = false;
                    break;
                }
                double piece = (cc - m).dot(inward) / len;
                if (piece <= 1e-12) circOk = false;  // not strictly well-centered
                s1[e] += piece / edgeDir.norm();
            }
        }
        if (circOk)
            for (int e = 0; e < E; ++e)
                if (s1[e] <= 1e-12) circOk = false;
        if (circOk) {
            circStars = {s0, s1, s2};
            circCorners.resize(V, S);
            circCorners.setFromTriplets(corners.begin(), corners.end());
        }
    }

    if (circOk) {
        dec.starKind_ = "circumcentric";
        dec.stars_ = std::move(circStars);
        dec.cornerAreas_ = std::move(circCorners);
    } else {
        dec.starKind_ = "barycentric";
        // Barycentric dual volumes: sum over barycenter chains
        // f = f_k < f_{k+1} < ... < f_n of the chain simplex volumes.
        std::vector<std::vector<std::vector<int>>> cofaces(n);
        for (int k = 0; k < n; ++k) {
            cofaces[k].resize(M.faceCount(k));
            const SparseMat& dk = M.complex.d[k];
            for (int c = 0; c < dk.cols(); ++c)
                for (SparseMat::InnerIterator it(dk, c); it; ++it)
                    cofaces[k][c].push_back(static_cast<int>(it.row()));
        }
        dec.stars_.assign(n + 1, Vec());
        for (int k = 0; k <= n; ++k) {
            Vec dual = Vec::Zero(M.faceCount(k));
            for (int f = 0; f < M.faceCount(k); ++f) {
                std::vector<Vec> bary{barycenter(M.facePoints(k, f))};
                double total = 0.0;
                auto dfs = [&](auto&& self, int deg, int id) -> void {
                    if (deg == n) {
                        Mat pts(static_cast<int>(bary.size()), M.ambientDim());
                        for (size_t r = 0; r < bary.size(); ++r)
                            pts.row(static_cast<int>(r)) = bary[r];
                        total += simplexVolume(pts);
                        return;
                    }
                    for (int g : cofaces[deg][id]) {
                        bary.push_back(barycenter(M.facePoints(deg + 1, g)));
                        self(self, deg + 1, g);
                        bary.pop_back();
                    }
                };
                dfs(dfs, k, f);
                dual[f] = (k == n) ? 1.0 : total;
            }
            Vec s(M.faceCount(k));
            for (int f = 0; f < M.faceCount(k); ++f) {
                double primal = (k == 0) ? 1.0 : M.faceVolume(k, f);
                s[f] = dual[f] / primal;
            }
            dec.stars_[k] = s;
        }
        // Barycentric corner of v in sigma is exactly vol(sigma) / (n+1).
        std::vector<Eigen::Triplet<double>> corners;
        for (int t = 0; t < M.faceCount(n); ++t) {
            double share = M.faceVolume(n, t) / (n + 1);
            for (int v : M.complex.faces[n][t]) corners.emplace_back(v, t, share);
        }
        dec.cornerAreas_.resize(M.faceCount(0), M.faceCount(n));
        dec.cornerAreas_.setFromTriplets(corners.begin(), corners.end());
    }

    for (int k = 0; k <= n; ++k)
        for (int i = 0; i < dec.stars_[k].size(); ++i)
            if (!(dec.stars_[k][i] > 0.0) || !std::isfinite(dec.stars_[k][i]))
                throw ValidationError("dec.hodge_star: invalid star entry at degree " +
                                      std::to_string(k));

    // Dual divergence on 1-cochains: -(d_0^T star_1).
    dec.dualDiv_ = SparseMat((-1.0) * (SparseMat(M.complex.d[0].transpose()) *
                                       SparseMat(dec.stars_[1].asDiagonal())));

    if (M.hasBoundary()) {
        dec.boundary_ = M.boundaryComplex();
        dec.boundarySegment_ = Vec::Zero(static_cast<int>(M.boundaryVertices.size()));
        std::map<int, int> rowOf;
        for (size_t i = 0; i < M.boundaryVertices.size(); ++i)
            rowOf[M.boundaryVertices[i]] = static_cast<int>(i);
        // Half of each incident boundary face meets the clipped dual cell.
        for (int f : M.boundaryFaces) {
            double half = 0.5 * M.faceVolume(n - 1, f);
            for (int v : M.complex.faces[n - 1][f]) dec.boundarySegment_[rowOf.at(v)] += half;
        }
    }

    return dec;
}

Cochain DecOperators::coboundary(const Cochain& c) const {
    if (c.degree < 0 || c.degree > M_->n - 1)
        throw ValidationError("dec.coboundary: degree out of range");
    checkDegree(c, c.degree, "coboundary");
    return Cochain(c.degree + 1, d(c.degree) * c.values);
}

Cochain DecOperators::hodgeStar(const Cochain& c) const {
    checkDegree(c, c.degree, "hodge_star");
    return Cochain(M_->n - c.degree, stars_[c.degree].cwiseProduct(c.values));
}

Cochain DecOperators::boundaryTrace(const Cochain& c) const {
    if (c.degree > M_->n - 1)
        throw ValidationError("dec.boundary_trace: degree must be at most n-1");
    checkDegree(c, c.degree, "boundary_trace");
    if (!M_->hasBoundary()) return Cochain(c.degree, Vec());
    const int k = c.degree;
    Vec out(boundary_.count(k));
    if (k == M_->n - 1) {
        for (size_t i = 0; i < M_->boundaryFaces.size(); ++i)
            out[static_cast<int>(i)] = M_->boundarySign[i] * c.values[M_->boundaryFaces[i]];
    } else {
        for (int i = 0; i < boundary_.count(k); ++i) {
            auto [id, sign] = M_->complex.locate(k, boundary_.faces[k][i]);
            out[i] = sign * c.values[id];
        }
    }
    return Cochain(k, out);
}

double DecOperators::boundaryIntegral(const Cochain& c) const {
    Cochain tr = boundaryTrace(c);
    if (tr.degree != M_->n - 1)
        throw ValidationError("dec.boundary_trace: boundary integral needs degree n-1");
    return tr.values.sum();
}

double DecOperators::boundaryIntegral(const Cochain& c, int component) const {
    Cochain tr = boundaryTrace(c);
    auto comp = M_->boundaryComponents();
    double s = 0.0;
    for (size_t i = 0; i < M_->boundaryFaces.size(); ++i)
        if (comp[i] == component) s += tr.values[static_cast<int>(i)];
    return s;
}

Vec DecOperators::dualDivergence(const Cochain& eta) const {
    checkDegree(eta, 1, "dual_divergence");
    return dualDiv_ * eta.values;
}

Vec DecOperators::toDualCells(const Cochain& top) const {
    checkDegree(top, M_->n, "to_dual_cells");
    Vec density(top.values.size());
    for (int t = 0; t < top.values.size(); ++t)
        density[t] = top.values[t] / M_->faceVolume(M_->n, t);
    return cornerAreas_ * density;
}

Mat DecOperators::whitneyVectors(const Cochain& eta) const {
    checkDegree(eta, 1, "normal_component");
    const int D = M_->ambientDim(), V = M_->vertexCount(), n = M_->n;
    Mat out = Mat::Zero(V, D);
    Vec weight = Vec::Zero(V);
    for (int t = 0; t < M_->simplexCount(); ++t) {
        Mat pts = M_->facePoints(n, t);
        double area = simplexVolume(pts);
        Mat U = planeBasis(pts);
        Mat E(n, n);
        const auto& verts = M_->complex.faces[n][t];
        for (int c = 1; c <= n; ++c) E.col(c - 1) = U.transpose() * Vec(pts.row(c) - pts.row(0));
        Mat gradLoc = E.inverse().transpose();  // columns: grad lambda_1..n in plane coords
        for (size_t j = 0; j < verts.size(); ++j) {
            int v = verts[j];
            Vec vf = Vec::Zero(D);
            for (size_t l = 0; l < verts.size(); ++l) {
                if (l == j) continue;
                int u = verts[l];
                std::vector<int> key{std::min(v, u), std::max(v, u)};
                double val = eta.values[M_->complex.index[1].at(key)];
                if (v > u) val = -val;  // orient the edge v -> u
                Vec g = (l == 0) ? Vec(-U * gradLoc.rowwise().sum())
                                 : Vec(U * gradLoc.col(static_cast<int>(l) - 1));
                vf += val * g;
            }
            out.row(v) += area * vf.transpose();
            weight[v] += area;
        }
    }
    for (int v = 0; v < V; ++v)
        if (weight[v] > 0.0) out.row(v) /= weight[v];
    return out;
}

Vec DecOperators::normalComponent(const Cochain& eta, const BoundaryData& B) const {
    Mat vf = whitneyVectors(eta);
    Vec out(static_cast<int>(B.vertexIds.size()));
    for (size_t i = 0; i < B.vertexIds.size(); ++i)
        out[static_cast<int>(i)] = vf.row(B.vertexIds[i]).dot(B.normals.row(static_cast<int>(i)));
    return out;
}

Mat DecOperators::normalComponentMatrix(const BoundaryData& B) const {
    // Assemble per simplex, mirroring whitneyVectors, instead of probing with
    // basis cochains.
    const int D = M_->ambientDim(), V = M_->vertexCount(), n = M_->n;
    const int E = M_->faceCount(1);
    std::vector<Eigen::Triplet<double>> trips;
    Vec weight = Vec::Zero(V);
    std::vector<std::vector<std::pair<int, Vec>>> perVertex(V);  // (edge, vector)
    for (int t = 0; t < M_->simplexCount(); ++t) {
        Mat pts = M_->facePoints(n, t);
        double area = simplexVolume(pts);
        Mat U = planeBasis(pts);
        Mat Ed(n, n);
        const auto& verts = M_->complex.faces[n][t];
        for (int c = 1; c <= n; ++c) Ed.col(c - 1) = U.transpose() * Vec(pts.row(c) - pts.row(0));
        Mat gradLoc = Ed.inverse().transpose();
        for (size_t j = 0; j < verts.size(); ++j) {
            int v = verts[j];
            if (B.indexOf(v) < 0) continue;
            for (size_t l = 0; l < verts.size(); ++l) {
                if (l == j) continue;
                int u = verts[l];
                std::vector<int> key{std::min(v, u), std::max(v, u)};
                int e = M_->complex.index[1].at(key);
                double sgn = (v > u) ? -1.0 : 1.0;
                Vec g = (l == 0) ? Vec(-U * gradLoc.rowwise().sum())
                                 : Vec(U * gradLoc.col(static_cast<int>(l) - 1));
                perVertex[v].push_back({e, sgn * area * g});
            }
            weight[v] += area;
        }
    }
    Mat W = Mat::Zero(static_cast<int>(B.vertexIds.size()), E);
    for (size_t i = 0; i < B.vertexIds.size(); ++i) {
        int v = B.vertexIds[i];
        Vec N = B.normals.row(static_cast<int>(i));
        for (const auto& [e, g] : perVertex[v]) W(static_cast<int>(i), e) += N.dot(g) / weight[v];
    }
    return W;
}

Vec DecOperators::codifferential1(const Cochain& eta, const BoundaryData& B) const {
    checkDegree(eta, 1, "codifferential");
    // Full dual-cell divergence = interior flux (dualDivergence) plus the
    // outward flux through the boundary segment, which is -length * eta(N).
    Vec div = dualDivergence(eta);
    Vec wn = normalComponent(eta, B);
    for (size_t i = 0; i < B.vertexIds.size(); ++i)
        div[B.vertexIds[i]] -= boundarySegment_[static_cast<int>(i)] * wn[static_cast<int>(i)];
    return -Vec(div.cwiseQuotient(stars_[0]));
}

double DecOperators::greenBoundaryTerm(const Cochain& f, const Cochain& eta,
                                       const BoundaryData& B) const {
    checkDegree(f, 0, "green_boundary_term");
    Vec wn = normalComponent(eta, B);
    double s = 0.0;
    for (size_t i = 0; i < B.vertexIds.size(); ++i)
        s -= f.values[B.vertexIds[i]] * boundarySegment_[static_cast<int>(i)] *
             wn[static_cast<int>(i)];
    return s;
}

double DecOperators::inner(const Cochain& a, const Cochain& b) const {
    if (a.degree != b.degree)
        throw ValidationError("dec.inner: degree mismatch");
    checkDegree(a, a.degree, "inner");
    return a.values.dot(stars_[a.degree].cwiseProduct(b.values));
}

}  // namespace slag
