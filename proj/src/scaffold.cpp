#include "slag/scaffold.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace slag {

namespace {

Mat omegaMatrixFor(int n) { return Ambient(n).omegaMatrix(); }

double omegaPair(const Vec& u, const Vec& v) {
    double s = 0.0;
    for (int i = 0; 2 * i + 1 < u.size(); ++i)
        s += u[2 * i] * v[2 * i + 1] - u[2 * i + 1] * v[2 * i];
    return s;
}

}  // namespace

QuadricComponent::QuadricComponent(int n, Complex c, std::vector<Complex> weights)
    : n_(n), c_(c), w_(std::move(weights)) {
    if (w_.empty()) w_.assign(n_, Complex(1.0, 0.0));
    if (static_cast<int>(w_.size()) != n_)
        throw ValidationError("ambient.scaffold: quadric needs one weight per complex coordinate");
}

ScaffoldEval QuadricComponent::eval(const Vec& p) const {
    if (p.size() != 2 * n_)
        throw ValidationError("ambient.scaffold_eval: point has wrong dimension");
    ScaffoldEval ev;
    ev.g1 = Vec::Zero(2 * n_);
    ev.g2 = Vec::Zero(2 * n_);
    ev.H1 = Mat::Zero(2 * n_, 2 * n_);
    ev.H2 = Mat::Zero(2 * n_, 2 * n_);
    Complex total = -c_;
    for (int k = 0; k < n_; ++k) {
        Complex z(p[2 * k], p[2 * k + 1]);
        total += w_[k] * z * z;
        Complex dz = 2.0 * w_[k] * z;  // complex derivative wrt z_k
        ev.g1[2 * k] = dz.real();
        ev.g1[2 * k + 1] = -dz.imag();
        ev.g2[2 * k] = dz.imag();
        ev.g2[2 * k + 1] = dz.real();
        double a = 2.0 * w_[k].real(), b = 2.0 * w_[k].imag();
        ev.H1(2 * k, 2 * k) = a;
        ev.H1(2 * k, 2 * k + 1) = -b;
        ev.H1(2 * k + 1, 2 * k) = -b;
        ev.H1(2 * k + 1, 2 * k + 1) = -a;
        ev.H2(2 * k, 2 * k) = b;
        ev.H2(2 * k, 2 * k + 1) = a;
        ev.H2(2 * k + 1, 2 * k) = a;
        ev.H2(2 * k + 1, 2 * k + 1) = -b;
    }
    ev.F1 = total.real();
    ev.F2 = total.imag();
    return ev;
}

std::string QuadricComponent::describe() const {
    std::ostringstream os;
    os << "quadric(c=" << c_.real();
    if (c_.imag() != 0.0) os << (c_.imag() > 0 ? "+" : "") << c_.imag() << "i";
    os << ")";
    return os.str();
}

GraphChartComponent::GraphChartComponent(int n, int axis1, int axis2, double off1, double off2,
                                         double amp1, double amp2, Vec center)
    : n_(n), axis1_(axis1), axis2_(axis2), center_(std::move(center)) {
    off_[0] = off1;
    off_[1] = off2;
    amp_[0] = amp1;
    amp_[1] = amp2;
    if (axis1_ == axis2_ || axis1_ < 0 || axis2_ < 0 || axis1_ >= 2 * n_ || axis2_ >= 2 * n_)
        throw ValidationError("ambient.scaffold: graph chart axes must be distinct coordinates");
    if (center_.size() == 0) center_ = Vec::Zero(2 * n_ - 2);
    if (center_.size() != 2 * n_ - 2)
        throw ValidationError("ambient.scaffold: chart center must have 2n-2 entries");
}

Vec GraphChartComponent::baseCoords(const Vec& p) const {
    Vec w(2 * n_ - 2);
    int j = 0;
    for (int i = 0; i < 2 * n_; ++i)
        if (i != axis1_ && i != axis2_) w[j++] = p[i];
    return w;
}

double GraphChartComponent::height(int i, const Vec& w) const {
    return off_[i] + amp_[i] * (w - center_).squaredNorm();
}

Vec GraphChartComponent::heightGradient(int i, const Vec& w) const {
    return 2.0 * amp_[i] * (w - center_);
}

std::array<double, 2> GraphChartComponent::sCoords(const Vec& p) const {
    Vec w = baseCoords(p);
    return {p[axis1_] - height(0, w), p[axis2_] - height(1, w)};
}

Vec GraphChartComponent::embed(const Vec& w, double s1, double s2) const {
    Vec p(2 * n_);
    int j = 0;
    for (int i = 0; i < 2 * n_; ++i) {
        if (i == axis1_ || i == axis2_) continue;
        p[i] = w[j++];
    }
    p[axis1_] = height(0, w) + s1;
    p[axis2_] = height(1, w) + s2;
    return p;
}

Mat GraphChartComponent::liftDifferential(const Vec& w) const {
    Mat L = Mat::Zero(2 * n_, 2 * n_ - 2);
    Vec dh1 = heightGradient(0, w), dh2 = heightGradient(1, w);
    int j = 0;
    for (int i = 0; i < 2 * n_; ++i) {
        if (i == axis1_ || i == axis2_) continue;
        L(i, j) = 1.0;
        L.row(axis1_)(j) = dh1[j];
        L.row(axis2_)(j) = dh2[j];
        ++j;
    }
    return L;
}

ScaffoldEval GraphChartComponent::eval(const Vec& p) const {
    if (p.size() != 2 * n_)
        throw ValidationError("ambient.scaffold_eval: point has wrong dimension");
    ScaffoldEval ev;
    Vec w = baseCoords(p);
    auto s = sCoords(p);
    ev.F1 = s[0];
    ev.F2 = s[1];
    ev.g1 = Vec::Zero(2 * n_);
    ev.g2 = Vec::Zero(2 * n_);
    ev.H1 = Mat::Zero(2 * n_, 2 * n_);
    ev.H2 = Mat::Zero(2 * n_, 2 * n_);
    ev.g1[axis1_] = 1.0;
    ev.g2[axis2_] = 1.0;
    Vec dh1 = heightGradient(0, w), dh2 = heightGradient(1, w);
    int j = 0;
    for (int i = 0; i < 2 * n_; ++i) {
        if (i == axis1_ || i == axis2_) continue;
        ev.g1[i] = -dh1[j];
        ev.g2[i] = -dh2[j];
        ev.H1(i, i) = -2.0 * amp_[0];
        ev.H2(i, i) = -2.0 * amp_[1];
        ++j;
    }
    return ev;
}

std::string GraphChartComponent::describe() const {
    std::ostringstream os;
    os << ((amp_[0] == 0.0 && amp_[1] == 0.0) ? "affine" : "product") << "(axes " << axis1_ << ","
       << axis2_ << ")";
    return os.str();
}

Scaffold Scaffold::quadric(int n, Complex c, std::vector<Complex> weights) {
    Scaffold W;
    W.n = n;
    W.components.push_back(std::make_shared<QuadricComponent>(n, c, std::move(weights)));
    return W;
}

Scaffold Scaffold::affinePlane(int n, int axis1, int axis2, double off1, double off2) {
    Scaffold W;
    W.n = n;
    W.components.push_back(
        std::make_shared<GraphChartComponent>(n, axis1, axis2, off1, off2, 0.0, 0.0, Vec()));
    return W;
}

Scaffold Scaffold::graphChart(int n, int axis1, int axis2, double off1, double off2, double amp1,
                              double amp2, Vec center) {
    Scaffold W;
    W.n = n;
    W.components.push_back(std::make_shared<GraphChartComponent>(n, axis1, axis2, off1, off2, amp1,
                                                                 amp2, std::move(center)));
    return W;
}

ScaffoldEval Scaffold::eval(int comp, const Vec& p) const {
    return components.at(comp)->eval(p);
}

double Scaffold::residual(int comp, const Vec& p) const {
    ScaffoldEval ev = eval(comp, p);
    return std::max(std::abs(ev.F1), std::abs(ev.F2));
}

Vec Scaffold::project(int comp, const Vec& p) const {
    if (!p.allFinite())
        throw SolveError("ambient.scaffold_project: non-finite point");
    const int D = static_cast<int>(p.size());
    Vec q = p;
    Eigen::Vector2d lambda = Eigen::Vector2d::Zero();
    const double ftol = 1e-12;
    double scale = std::max(1.0, p.norm());

    for (int iter = 0; iter < 50; ++iter) {
        ScaffoldEval ev = eval(comp, q);
        Mat G(2, D);
        G.row(0) = ev.g1.transpose();
        G.row(1) = ev.g2.transpose();
        Eigen::Matrix2d gram = (G * G.transpose()).eval();
        if (gram.determinant() < 1e-24 * scale * scale)
            throw SolveError("ambient.scaffold_project: singular gradient pair");

        Vec r1 = q - p - G.transpose() * lambda;
        Eigen::Vector2d r2(ev.F1, ev.F2);
        if (r2.cwiseAbs().maxCoeff() <= ftol && r1.norm() <= 1e-11 * scale) return q;

        // Newton on the KKT system [q - p - G^T l; F(q)] = 0.
        Mat K = Mat::Zero(D + 2, D + 2);
        K.topLeftCorner(D, D) =
            Mat::Identity(D, D) - lambda[0] * ev.H1 - lambda[1] * ev.H2;
        K.topRightCorner(D, 2) = -G.transpose();
        K.bottomLeftCorner(2, D) = G;
        Vec rhs(D + 2);
        rhs.head(D) = -r1;
        rhs.tail(2) = -r2;
        Vec step = K.partialPivLu().solve(rhs);
        if (!step.allFinite())
            throw SolveError("ambient.scaffold_project: singular KKT system");
        q += step.head(D);
        lambda += step.tail(2);
    }
    throw SolveError("ambient.scaffold_project: no convergence within 50 iterations");
}

Mat Scaffold::projectionDifferential(int comp, const Vec& p) const {
    Vec q = project(comp, p);
    const int D = static_cast<int>(p.size());
    ScaffoldEval ev = eval(comp, q);
    Mat G(2, D);
    G.row(0) = ev.g1.transpose();
    G.row(1) = ev.g2.transpose();
    Eigen::Vector2d lambda =
        (G * G.transpose()).ldlt().solve(G * (q - p));
    Mat K = Mat::Zero(D + 2, D + 2);
    K.topLeftCorner(D, D) = Mat::Identity(D, D) - lambda[0] * ev.H1 - lambda[1] * ev.H2;
    K.topRightCorner(D, 2) = -G.transpose();
    K.bottomLeftCorner(2, D) = G;
    Mat rhs = Mat::Zero(D + 2, D);
    rhs.topRows(D) = Mat::Identity(D, D);
    Mat sol = K.partialPivLu().solve(rhs);
    return sol.topRows(D);
}

Mat Scaffold::tangentBasis(int comp, const Vec& q) const {
    ScaffoldEval ev = eval(comp, q);
    const int D = static_cast<int>(q.size());
    Mat G(2, D);
    G.row(0) = ev.g1.transpose();
    G.row(1) = ev.g2.transpose();
    Eigen::JacobiSVD<Mat> svd(G, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(D - 2);
}

Mat Scaffold::tangentProjector(int comp, const Vec& q) const {
    Mat T = tangentBasis(comp, q);
    return T * T.transpose();
}

double Scaffold::restrictedOmegaMinSV(int comp, const Vec& q) const {
    Mat T = tangentBasis(comp, q);
    Mat O = omegaMatrixFor(n);
    Mat R = T.transpose() * O * T;
    Eigen::JacobiSVD<Mat> svd(R);
    return svd.singularValues().minCoeff();
}

std::pair<Vec, Vec> Scaffold::frame(int comp, const Vec& q) const {
    if (restrictedOmegaMinSV(comp, q) <= 1e-8)
        throw ValidationError(
            "ambient.scaffold_frame: omega degenerates on the scaffold tangent space");
    ScaffoldEval ev = eval(comp, q);
    Mat O = omegaMatrixFor(n);
    // Hamiltonian fields of the defining functions span (T_qW)^omega.
    Vec X1 = O * ev.g1;
    Vec X2 = O * ev.g2;
    // Orthonormalize, then make the choice deterministic: E is the basis
    // vector whose largest-magnitude entry sits at the smallest coordinate,
    // sign-fixed so that entry is positive.
    Vec u1 = X1.normalized();
    Vec u2 = (X2 - u1.dot(X2) * u1);
    if (u2.norm() < 1e-12 * X2.norm())
        throw ValidationError("ambient.scaffold_frame: defining gradients are not independent");
    u2.normalize();
    auto leadIndex = [](const Vec& v) {
        int best = 0;
        for (int i = 1; i < v.size(); ++i)
            if (std::abs(v[i]) > std::abs(v[best]) + 1e-12) best = i;
        return best;
    };
    int l1 = leadIndex(u1), l2 = leadIndex(u2);
    bool pickFirst = l1 < l2 || (l1 == l2 && std::abs(u1[l1]) >= std::abs(u2[l2]));
    Vec E = pickFirst ? u1 : u2;
    Vec other = pickFirst ? u2 : u1;
    if (E[leadIndex(E)] < 0.0) {
        E = -E;
        other = -other;
    }
    double w = omegaPair(E, other);
    if (std::abs(w) < 1e-10)
        throw ValidationError("ambient.scaffold_frame: omega(E, F) vanishes (non-symplectic)");
    Vec F = other / w;
    return {E, F};
}

namespace {

struct KeyValues {
    std::map<std::string, std::string> kv;
    const std::string name;

    bool has(const std::string& k) const { return kv.count(k) > 0; }
    std::string str(const std::string& k, const std::string& dflt = "") const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    }
    double num(const std::string& k, double dflt) const {
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        try {
            size_t pos = 0;
            double v = std::stod(it->second, &pos);
            return v;
        } catch (...) {
            throw ParseError("ambient.scaffold: " + name + ": bad number for key '" + k + "'");
        }
    }
    std::vector<double> nums(const std::string& k) const {
        std::vector<double> out;
        std::istringstream is(str(k));
        double v;
        while (is >> v) out.push_back(v);
        return out;
    }
};

std::shared_ptr<const ScaffoldComponent> buildComponent(const KeyValues& kv, int n,
                                                        const std::string& prefix) {
    std::string type = kv.str(prefix + "type");
    if (type == "quadric") {
        Complex c(kv.num(prefix + "c", 1.0), kv.num(prefix + "c_im", 0.0));
        std::vector<Complex> w;
        for (int k = 0; k < n; ++k) {
            std::string key = prefix + "w" + std::to_string(k + 1);
            if (kv.has(key)) {
                auto parts = kv.nums(key);
                if (parts.empty() || parts.size() > 2)
                    throw ParseError("ambient.scaffold: weight '" + key + "' needs 're [im]'");
                w.resize(n, Complex(1.0, 0.0));
                w[k] = Complex(parts[0], parts.size() > 1 ? parts[1] : 0.0);
            }
        }
        return std::make_shared<QuadricComponent>(n, c, std::move(w));
    }
    if (type == "affine" || type == "product") {
        int a1 = static_cast<int>(kv.num(prefix + "axis1", 0));
        int a2 = static_cast<int>(kv.num(prefix + "axis2", 1));
        double o1 = kv.num(prefix + "offset1", 0.0);
        double o2 = kv.num(prefix + "offset2", 0.0);
        double m1 = (type == "product") ? kv.num(prefix + "amp1", 0.0) : 0.0;
        double m2 = (type == "product") ? kv.num(prefix + "amp2", 0.0) : 0.0;
        Vec center;
        auto c = kv.nums(prefix + "center");
        if (!c.empty()) center = Eigen::Map<Vec>(c.data(), static_cast<int>(c.size()));
        return std::make_shared<GraphChartComponent>(n, a1, a2, o1, o2, m1, m2, center);
    }
    throw ParseError("ambient.scaffold: unknown type '" + type +
                     "' (expected quadric, affine, product or multi)");
}

}  // namespace

Scaffold Scaffold::parse(std::istream& in, const std::string& name) {
    KeyValues kv{{}, name};
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv.kv[key] = val;
    }
    int n = static_cast<int>(kv.num("n", 2));
    Scaffold W;
    W.n = n;
    if (kv.str("type") == "multi") {
        int count = static_cast<int>(kv.num("components", 0));
        if (count < 1)
            throw ParseError("ambient.scaffold: " + name + ": multi scaffold needs 'components'");
        for (int j = 1; j <= count; ++j)
            W.components.push_back(buildComponent(kv, n, std::to_string(j) + "."));
    } else {
        W.components.push_back(buildComponent(kv, n, ""));
    }
    return W;
}

Scaffold Scaffold::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("ambient.scaffold: cannot open '" + path + "'");
    return parse(in, path);
}

std::vector<int> assignScaffoldComponents(const Scaffold& W, const SimplicialPatch& M,
                                          const BoundaryData& B) {
    int nComp = 0;
    for (int c : B.componentOfVertex) nComp = std::max(nComp, c + 1);
    std::vector<int> best(nComp, 0);
    for (int rc = 0; rc < nComp; ++rc) {
        double bestRes = std::numeric_limits<double>::infinity();
        for (int sc = 0; sc < W.componentCount(); ++sc) {
            double worst = 0.0;
            for (size_t i = 0; i < B.vertexIds.size(); ++i) {
                if (B.componentOfVertex[i] != rc) continue;
                worst = std::max(worst, W.residual(sc, M.vertices.row(B.vertexIds[i])));
            }
            if (worst < bestRes) {
                bestRes = worst;
                best[rc] = sc;
            }
        }
    }
    std::vector<int> assign(B.vertexIds.size());
    for (size_t i = 0; i < B.vertexIds.size(); ++i) assign[i] = best[B.componentOfVertex[i]];
    return assign;
}

std::vector<std::vector<int>> orderedBoundaryLoops(const SimplicialPatch& M) {
    if (M.n != 2)
        throw ValidationError("mesh: ordered boundary loops need a surface patch");
    std::map<int, int> next;
    for (size_t i = 0; i < M.boundaryFaces.size(); ++i) {
        const auto& e = M.complex.faces[1][M.boundaryFaces[i]];
        if (M.boundarySign[i] > 0)
            next[e[0]] = e[1];
        else
            next[e[1]] = e[0];
    }
    std::vector<std::vector<int>> loops;
    std::map<int, bool> seen;
    for (const auto& [start, unused] : next) {
        if (seen[start]) continue;
        std::vector<int> loop;
        int v = start;
        do {
            loop.push_back(v);
            seen[v] = true;
            v = next.at(v);
        } while (v != start);
        loops.push_back(std::move(loop));
    }
    return loops;
}

double ScaffoldConditionsReport::maxContainment() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max({m, r.contain1, r.contain2});
    return m;
}

double ScaffoldConditionsReport::maxTransversality() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, r.transversality);
    return m;
}

double ScaffoldConditionsReport::maxFrame() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max({m, r.frameOmega, r.frameOrtho});
    return m;
}

bool ScaffoldConditionsReport::pass() const {
    return loopConsistent && maxContainment() <= containTol &&
           maxTransversality() <= transversalityTol && maxFrame() <= frameTol;
}

std::string ScaffoldConditionsReport::table() const {
    std::ostringstream os;
    char buf[160];
    os << "vertex comp  |F1|          |F2|          omega(N,TW)   |w(E,F)-1|    "
          "|w(EF,TW)|\n";
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%6d %4d  %-13.6g %-13.6g %-13.6g %-13.6g %-13.6g\n",
                      r.vertex, r.component, r.contain1, r.contain2, r.transversality,
                      r.frameOmega, r.frameOrtho);
        os << buf;
    }
    os << "scaffold conditions: " << (pass() ? "pass" : "FAIL") << "\n";
    return os.str();
}

ScaffoldConditionsReport checkScaffoldConditions(const Scaffold& W, const SimplicialPatch& M,
                                                 const BoundaryData& B) {
    ScaffoldConditionsReport rep;
    std::vector<int> assign = assignScaffoldComponents(W, M, B);
    rep.rows.resize(B.vertexIds.size());

    for (size_t i = 0; i < B.vertexIds.size(); ++i) {
        int v = B.vertexIds[i];
        int sc = assign[i];
        Vec p = M.vertices.row(v);
        ScaffoldConditionsReport::Row row;
        row.vertex = v;
        row.component = sc;
        ScaffoldEval ev = W.eval(sc, p);
        row.contain1 = std::abs(ev.F1);
        row.contain2 = std::abs(ev.F2);

        Mat T = W.tangentBasis(sc, p);
        Vec N = B.normals.row(static_cast<int>(i));
        double tr = 0.0;
        for (int c = 0; c < T.cols(); ++c) tr = std::max(tr, std::abs(omegaPair(N, T.col(c))));
        row.transversality = tr;
        rep.rows[i] = row;
    }

    // Frame validity with sign continuity along each rim loop.
    if (M.n == 2) {
        auto loops = orderedBoundaryLoops(M);
        for (const auto& loop : loops) {
            Vec prevE;
            Vec firstE;
            for (size_t j = 0; j <= loop.size(); ++j) {
                int v = loop[j % loop.size()];
                int bi = B.indexOf(v);
                if (bi < 0) continue;
                Vec p = M.vertices.row(v);
                int sc = assign[bi];
                try {
                    auto [E, F] = W.frame(sc, p);
                    if (prevE.size() && prevE.dot(E) < 0.0) {
                        E = -E;
                        F = -F;
                    }
                    if (j == loop.size()) {
                        // closing the loop: the propagated sign must agree
                        if (firstE.size() && firstE.dot(E) < 0.0) rep.loopConsistent = false;
                        break;
                    }
                    if (j == 0) firstE = E;
                    prevE = E;
                    Mat T = W.tangentBasis(sc, p);
                    double fo = std::abs(omegaPair(E, F) - 1.0);
                    double ft = 0.0;
                    for (int c = 0; c < T.cols(); ++c)
                        ft = std::max({ft, std::abs(omegaPair(E, T.col(c))),
                                       std::abs(omegaPair(F, T.col(c)))});
                    rep.rows[bi].frameOmega = fo;
                    rep.rows[bi].frameOrtho = ft;
                } catch (const ValidationError&) {
                    rep.rows[bi].frameOmega = std::numeric_limits<double>::infinity();
                    rep.loopConsistent = false;
                    break;
                }
            }
        }
    }
    return rep;
}

}  // namespace slag
