#include "slag/flow.hpp"

#include "slag/hatmetric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace slag {

ScaffoldSection ScaffoldSection::frameConstant(double a1, double a2) {
    ScaffoldSection s;
    s.kind = Kind::FrameConstant;
    s.a1 = a1;
    s.a2 = a2;
    return s;
}

ScaffoldSection ScaffoldSection::quadricRadial(double delta) {
    ScaffoldSection s;
    s.kind = Kind::QuadricRadial;
    s.delta = delta;
    return s;
}

bool ScaffoldSection::isZero() const {
    switch (kind) {
        case Kind::FrameConstant: return a1 == 0.0 && a2 == 0.0;
        case Kind::QuadricRadial: return delta == 0.0;
        case Kind::Sampled: return sampleCoeffs.size() == 0 || sampleCoeffs.isZero(0.0);
    }
    return true;
}

ScaffoldSection ScaffoldSection::parse(const std::string& arg) {
    auto parseArgs = [&](const std::string& inner) {
        std::vector<double> vals;
        std::istringstream is(inner);
        std::string tok;
        while (std::getline(is, tok, ','))
            vals.push_back(std::stod(tok));
        return vals;
    };
    auto paren = arg.find('(');
    if (paren != std::string::npos && arg.back() == ')') {
        std::string name = arg.substr(0, paren);
        std::string inner = arg.substr(paren + 1, arg.size() - paren - 2);
        try {
            if (name == "radial") {
                auto v = parseArgs(inner);
                if (v.size() != 1) throw ParseError("");
                return quadricRadial(v[0]);
            }
            if (name == "constant") {
                auto v = parseArgs(inner);
                if (v.size() != 2) throw ParseError("");
                return frameConstant(v[0], v[1]);
            }
        } catch (const std::exception&) {
            throw ParseError("flow.section: cannot parse built-in section '" + arg + "'");
        }
        throw ParseError("flow.section: unknown built-in section '" + name + "'");
    }
    // key-value file
    std::ifstream in(arg);
    if (!in)
        throw ParseError("flow.section: cannot open '" + arg + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    std::vector<std::vector<double>> samples;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::istringstream ls(line);
            std::vector<double> row;
            double v;
            while (ls >> v) row.push_back(v);
            if (!row.empty()) samples.push_back(row);
            continue;
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    std::string type = kv.count("type") ? kv["type"] : "";
    if (type == "radial") return quadricRadial(std::stod(kv.at("delta")));
    if (type == "constant") return frameConstant(std::stod(kv.at("a1")), std::stod(kv.at("a2")));
    if (type == "sampled") {
        if (samples.empty())
            throw ParseError("flow.section: sampled section without sample rows");
        ScaffoldSection s;
        s.kind = Kind::Sampled;
        int cols = static_cast<int>(samples[0].size());
        if (cols < 4)
            throw ParseError("flow.section: sample rows need point coordinates plus a1 a2");
        s.samplePoints.resize(static_cast<int>(samples.size()), cols - 2);
        s.sampleCoeffs.resize(static_cast<int>(samples.size()), 2);
        for (size_t r = 0; r < samples.size(); ++r) {
            if (static_cast<int>(samples[r].size()) != cols)
                throw ParseError("flow.section: ragged sample rows");
            for (int c = 0; c < cols - 2; ++c)
                s.samplePoints(static_cast<int>(r), c) = samples[r][c];
            s.sampleCoeffs(static_cast<int>(r), 0) = samples[r][cols - 2];
            s.sampleCoeffs(static_cast<int>(r), 1) = samples[r][cols - 1];
        }
        return s;
    }
    throw ParseError("flow.section: unknown section type '" + type + "'");
}

FlowSpec::FlowSpec(const Scaffold& W, int component, ScaffoldSection X, double rIn, double rOut,
                   int stepsPerUnitTime)
    : W_(&W), comp_(component), X_(std::move(X)), rIn_(rIn), rOut_(rOut),
      stepsPerUnit_(stepsPerUnitTime), Omega_(Ambient(W.n).omegaMatrix()) {
    if (!(rIn_ > 0.0) || !(rOut_ > rIn_))
        throw ValidationError("flow.hamiltonian: need 0 < r_in < r_out");
    if (stepsPerUnit_ < 1)
        throw ValidationError("flow.hamiltonian: need at least one integrator step");
}

std::pair<double, double> FlowSpec::defaultRadii(const SimplicialPatch& M,
                                                 const BoundaryData& B) {
    double diam = 0.0;
    for (size_t i = 0; i < B.vertexIds.size(); ++i)
        for (size_t j = i + 1; j < B.vertexIds.size(); ++j)
            diam = std::max(diam, (M.vertices.row(B.vertexIds[i]) -
                                   M.vertices.row(B.vertexIds[j]))
                                      .norm());
    if (diam == 0.0) diam = 1.0;
    return {0.2 * diam, 0.5 * diam};
}

Vec FlowSpec::sectionAt(const Vec& q) const {
    switch (X_.kind) {
        case ScaffoldSection::Kind::QuadricRadial: {
            auto quad = dynamic_cast<const QuadricComponent*>(W_->components.at(comp_).get());
            if (!quad)
                throw ValidationError("flow.section: radial sections need a quadric scaffold");
            double c = quad->levelValue().real();
            if (c <= 0.0 || c + X_.delta <= 0.0)
                throw ValidationError("flow.section: radial section needs positive levels");
            // kappa so that the time-one flow moves the real radius
            // sqrt(c) -> sqrt(c + delta)
            double kappa = std::sqrt(c + X_.delta) - std::sqrt(c);
            Vec X(q.size());
            for (int i = 0; 2 * i + 1 < q.size(); ++i) {
                X[2 * i] = q[2 * i];
                X[2 * i + 1] = -q[2 * i + 1];
            }
            return kappa * X;
        }
        case ScaffoldSection::Kind::FrameConstant: {
            auto [E, F] = W_->frame(comp_, q);
            return X_.a1 * E + X_.a2 * F;
        }
        case ScaffoldSection::Kind::Sampled: {
            // inverse-distance interpolation of the frame coefficients
            double wsum = 0.0, a1 = 0.0, a2 = 0.0;
            for (int r = 0; r < X_.samplePoints.rows(); ++r) {
                double d2 = (Vec(X_.samplePoints.row(r)) - q).squaredNorm();
                double w = 1.0 / (d2 + 1e-12);
                wsum += w;
                a1 += w * X_.sampleCoeffs(r, 0);
                a2 += w * X_.sampleCoeffs(r, 1);
            }
            auto [E, F] = W_->frame(comp_, q);
            return (a1 / wsum) * E + (a2 / wsum) * F;
        }
    }
    throw ValidationError("flow.section: unreachable");
}

double FlowSpec::hamiltonian(const Vec& p) const {
    Vec q;
    try {
        q = W_->project(comp_, p);
    } catch (const SolveError&) {
        return 0.0;  // outside the tubular neighbourhood
    }
    double r = (p - q).norm();
    if (r >= rOut_) return 0.0;
    Vec X = sectionAt(q);
    return bump(r, rIn_, rOut_) * X.dot(Omega_ * (p - q));
}

Vec FlowSpec::gradHamiltonian(const Vec& p) const {
    Vec q;
    try {
        q = W_->project(comp_, p);
    } catch (const SolveError&) {
        return Vec::Zero(p.size());
    }
    Vec diff = p - q;
    double r = diff.norm();
    if (r >= rOut_) return Vec::Zero(p.size());

    Mat dq = W_->projectionDifferential(comp_, p);
    Vec X = sectionAt(q);
    Mat dX;
    switch (X_.kind) {
        case ScaffoldSection::Kind::QuadricRadial: {
            auto quad = dynamic_cast<const QuadricComponent*>(W_->components.at(comp_).get());
            double c = quad->levelValue().real();
            double kappa = std::sqrt(c + X_.delta) - std::sqrt(c);
            dX = Mat::Zero(p.size(), p.size());
            for (int i = 0; 2 * i + 1 < p.size(); ++i) {
                dX(2 * i, 2 * i) = kappa;
                dX(2 * i + 1, 2 * i + 1) = -kappa;
            }
            break;
        }
        case ScaffoldSection::Kind::FrameConstant: {
            auto quad = dynamic_cast<const GraphChartComponent*>(W_->components.at(comp_).get());
            if (quad) {
                // affine frames are constant; curved graph charts fall back
                // to finite differences below
                dX = Mat::Zero(p.size(), p.size());
                break;
            }
            [[fallthrough]];
        }
        case ScaffoldSection::Kind::Sampled: {
            // finite-difference gradient of H directly
            const double h = 1e-6;
            Vec g(p.size());
            for (int i = 0; i < p.size(); ++i) {
                Vec pp = p, pm = p;
                pp[i] += h;
                pm[i] -= h;
                g[i] = (hamiltonian(pp) - hamiltonian(pm)) / (2.0 * h);
            }
            return g;
        }
    }

    // grad of G = X(q)^T Omega (p - q), then the product rule with the bump.
    Vec gradG = dq.transpose() * (dX.transpose() * (Omega_ * diff)) +
                (Mat::Identity(p.size(), p.size()) - dq).transpose() *
                    (Omega_.transpose() * X);
    double b = bump(r, rIn_, rOut_);
    Vec grad = b * gradG;
    if (r > rIn_ && r > 0.0) {
        // bump'(r) via the quintic smoothstep derivative
        double t = (r - rIn_) / (rOut_ - rIn_);
        double db = -(30.0 * t * t - 60.0 * t * t * t + 30.0 * t * t * t * t) / (rOut_ - rIn_);
        double G = X.dot(Omega_ * diff);
        Vec dr = (Mat::Identity(p.size(), p.size()) - dq).transpose() * (diff / r);
        grad += G * db * dr;
    }
    return grad;
}

Vec FlowSpec::hamiltonianField(const Vec& p) const { return Omega_ * gradHamiltonian(p); }

Vec FlowSpec::flow(const Vec& p, double time) const {
    if (X_.isZero() || time == 0.0) return p;
    int steps = std::max(1, static_cast<int>(std::ceil(std::abs(time) * stepsPerUnit_)));
    double h = time / steps;
    Vec q = p;
    for (int s = 0; s < steps; ++s) {
        // implicit midpoint: m = q + (h/2) X_H(m), fixed-point iteration
        Vec m = q + 0.5 * h * hamiltonianField(q);
        for (int it = 0; it < 60; ++it) {
            Vec mNext = q + 0.5 * h * hamiltonianField(m);
            double delta = (mNext - m).norm();
            m = mNext;
            if (delta <= 1e-14 * std::max(1.0, q.norm())) break;
            if (it == 59)
                throw SolveError("flow.time_one_flow: implicit midpoint did not converge");
        }
        q = 2.0 * m - q;
    }
    return q;
}

std::vector<Vec> FlowSpec::flowPoints(const std::vector<Vec>& pts, double time) const {
    std::vector<Vec> out;
    out.reserve(pts.size());
    for (const Vec& p : pts) out.push_back(flow(p, time));
    return out;
}

FlowedScaffoldRetractor::FlowedScaffoldRetractor(const FlowSpec& spec, double time)
    : spec_(&spec), time_(time) {}

Vec FlowedScaffoldRetractor::project(int component, const Vec& p) const {
    Vec back = spec_->flow(p, -time_);
    Vec q = spec_->scaffold().project(component, back);
    return spec_->flow(q, time_);
}

Mat FlowedScaffoldRetractor::differential(int component, const Vec& p) const {
    // central differences through the composite retraction
    const int D = static_cast<int>(p.size());
    const double h = 1e-6;
    Mat dP(D, D);
    for (int i = 0; i < D; ++i) {
        Vec pp = p, pm = p;
        pp[i] += h;
        pm[i] -= h;
        dP.col(i) = (project(component, pp) - project(component, pm)) / (2.0 * h);
    }
    return dP;
}

double FlowedScaffoldRetractor::residual(int component, const Vec& p) const {
    return spec_->scaffold().residual(component, spec_->flow(p, -time_));
}

ContinuationResult continuationSolve(const SimplicialPatch& M, const BoundaryData& B,
                                     const Scaffold& W, const ScaffoldSection& X,
                                     const ContinuationOptions& opt) {
    DecOperators dec = DecOperators::build(M);
    HodgeSystem H(M, dec, B);
    if (H.kernelDim() != 0)
        throw ValidationError(
            "flow.continuation_solve: b1(L) must vanish (found kernel dimension " +
            std::to_string(H.kernelDim()) + ")");
    if (W.componentCount() != 1)
        throw ValidationError(
            "flow.continuation_solve: a single scaffold component is required");

    auto [rInDef, rOutDef] = FlowSpec::defaultRadii(M, B);
    double rIn = opt.rIn > 0.0 ? opt.rIn : rInDef;
    double rOut = opt.rOut > 0.0 ? opt.rOut : rOutDef;
    FlowSpec spec(W, 0, X, rIn, rOut, opt.flowStepsPerUnit);

    DeformContext ctx(M, B, W);
    ContinuationResult res;

    Mat field = Mat::Zero(M.vertexCount(), M.ambientDim());
    double theta = 0.0;
    for (int k = 1; k <= opt.steps; ++k) {
        double t = static_cast<double>(k) / opt.steps;
        FlowedScaffoldRetractor retractor(spec, t);
        ctx.setRetractor(&retractor);
        NewtonOptions nopt;
        nopt.tol = opt.tol;
        nopt.maxIter = opt.maxIter;
        try {
            DeformationState init = makeState(ctx, field, theta);
            NewtonResult nr = newtonSolve(ctx, init, nopt);
            field = nr.state.field;
            theta = nr.state.theta;
            res.state = std::move(nr.state);
            res.reachedTime = t;
            res.stepResiduals.push_back(res.state.residualNorm());
        } catch (const SolveError& e) {
            throw SolveError("flow.continuation_solve: Newton failed at t = " +
                             std::to_string(t) + " (last good t = " +
                             std::to_string(res.reachedTime) + "): " + e.what());
        }
        double worst = 0.0;
        for (size_t i = 0; i < B.vertexIds.size(); ++i)
            worst = std::max(
                worst, retractor.residual(0, res.state.positions.row(B.vertexIds[i])));
        res.scaffoldResidual = worst;
    }
    return res;
}

}  // namespace slag
