// Acceptance suite: runs every top-level criterion at its stated tolerance
// and prints one pass/fail line per criterion.  Exit status is the number of
// failed criteria.

#include "slag/deform.hpp"
#include "slag/flow.hpp"
#include "slag/hatmetric.hpp"
#include "slag/io.hpp"
#include "slag/meshgen.hpp"
#include "testutil.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace slag;
using namespace slag::testutil;

namespace {

int failures = 0;

void criterion(int number, const std::string& name, const std::function<std::string()>& body) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
        detail = body();
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!detail.empty() && detail.rfind("FAIL", 0) == 0) ok = false;
    if (!ok) ++failures;
    std::printf("[%s] %2d. %-38s %s (%.1fs)\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str(), seconds);
    std::fflush(stdout);
}

std::string failUnless(bool ok, const std::string& detail) {
    return (ok ? "" : "FAIL ") + detail;
}

Cochain randomCochain(const SimplicialPatch& M, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Cochain c = Cochain::zero(k, M.faceCount(k));
    for (int i = 0; i < c.values.size(); ++i) c.values[i] = N(rng);
    return c;
}

Scaffold annulusScaffold() {
    Scaffold W = Scaffold::quadric(2, Complex(1, 0));
    W.components.push_back(Scaffold::quadric(2, Complex(4, 0)).components[0]);
    return W;
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");

    // ------------------------------------------------------------------ 1
    criterion(1, "harmonic kernel dimension = b1", [] {
        auto start = std::chrono::steady_clock::now();
        std::ostringstream os;
        bool ok = true;
        const std::vector<std::tuple<const char*, int, int>> cases = {
            {"disk", 16, 0}, {"disk", 24, 0},    {"annulus", 16, 1},
            {"annulus", 24, 1}, {"pants", 8, 2}, {"pants", 16, 2}};
        for (auto [shape, res, expected] : cases) {
            SimplicialPatch M = generateMesh(shape, res);
            DecOperators dec = DecOperators::build(M);
            BoundaryData B = boundaryData(M);
            HodgeSystem H(M, dec, B);
            int b1 = bettiNumbers(M).second;
            ok = ok && H.kernelDim() == expected && b1 == expected && H.kernelGap() >= 1e6;
            os << shape << res << ":dim=" << H.kernelDim() << ",gap=" << std::scientific
               << H.kernelGap() << " ";
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        ok = ok && secs <= 30.0;
        return failUnless(ok, os.str());
    });

    // ------------------------------------------------------------------ 2
    criterion(2, "kernel scalar a vanishes (<= 1e-8)", [] {
        double worst = 0.0;
        for (auto [shape, res] :
             std::vector<std::pair<const char*, int>>{{"annulus", 16}, {"pants", 8}}) {
            SimplicialPatch M = generateMesh(shape, res);
            DecOperators dec = DecOperators::build(M);
            BoundaryData B = boundaryData(M);
            HodgeSystem H(M, dec, B);
            double vol = dec.integrate(volumeCochain(M));
            for (const Cochain& eta : H.harmonicBasis())
                worst = std::max(worst, std::abs(-dec.dualDivergence(eta).sum() / vol));
        }
        return failUnless(worst <= 1e-8, "max |a| = " + fmt17(worst));
    });

    // ------------------------------------------------------------------ 3
    criterion(3, "integrability scalar recovery (1e-10)", [] {
        std::mt19937_64 rng(101);
        double worst = 0.0;
        for (auto [shape, res] : std::vector<std::pair<const char*, int>>{
                 {"disk", 16}, {"annulus", 16}, {"pants", 8}}) {
            SimplicialPatch M = generateMesh(shape, res);
            DecOperators dec = DecOperators::build(M);
            BoundaryData B = boundaryData(M);
            HodgeSystem H(M, dec, B);
            for (int t = 0; t < 10; ++t) {
                Cochain beta = randomCochain(M, 1, rng);
                HodgeProblem P;
                P.sigma = Cochain::zero(2, M.faceCount(2));
                P.tau = dec.coboundary(beta);
                P.freeVolMultiplier = true;
                HodgeSolution sol = H.solve(P);
                worst = std::max(worst,
                                 std::abs(sol.a - integrabilityScalar(beta, M, dec)));
            }
        }
        return failUnless(worst <= 1e-10, "max |a - oracle| = " + fmt17(worst));
    });

    // ------------------------------------------------------------------ 4
    criterion(4, "linearization matches FD (1e-6)", [] {
        std::mt19937_64 rng(103);
        std::normal_distribution<double> N(0.0, 1.0);
        double worst = 0.0;
        for (int mesh = 0; mesh < 2; ++mesh) {
            SimplicialPatch M = generateMesh(mesh == 0 ? "disk" : "annulus", 16);
            BoundaryData B = boundaryData(M);
            Scaffold W =
                (mesh == 0) ? Scaffold::quadric(2, Complex(1, 0)) : annulusScaffold();
            DeformContext ctx(M, B, W);
            LinearizedOperator lin = linearizeAtZero(ctx);
            const double h = 1e-5;
            for (int trial = 0; trial < 20; ++trial) {
                Vec u(ctx.dofCount());
                for (int i = 0; i < u.size(); ++i) u[i] = N(rng);
                double a = N(rng);
                auto [om, al] = lin.applyCoeffs(u, a);
                Vec predicted(om.values.size() + al.values.size());
                predicted << om.values, al.values;
                Mat field = ctx.fieldFromCoeffs(u);
                auto eval = [&](double t) {
                    DeformationState st = makeState(ctx, t * field, t * a);
                    Vec r(st.residualOmega.values.size() + st.residualAlpha.values.size());
                    r << st.residualOmega.values, st.residualAlpha.values;
                    return r;
                };
                Vec fd = (eval(h) - eval(-h)) / (2.0 * h);
                worst = std::max(worst,
                                 (fd - predicted).norm() / std::max(predicted.norm(), 1e-12));
            }
        }
        return failUnless(worst <= 1e-6, "max rel err = " + fmt17(worst));
    });

    // ------------------------------------------------------------------ 5
    criterion(5, "flat disk residual (<= 1e-14)", [] {
        SimplicialPatch M = generateMesh("disk", 16);
        BoundaryData B = boundaryData(M);
        Scaffold W = Scaffold::quadric(2, Complex(1, 0));
        DeformContext ctx(M, B, W);
        DeformationState st = makeState(ctx, Mat::Zero(M.vertexCount(), 4), 0.0);
        bool ok = st.normOmega <= 1e-14 && st.normAlpha <= 1e-14;
        return failUnless(ok, "omega = " + fmt17(st.normOmega) +
                                  ", alpha = " + fmt17(st.normAlpha));
    });

    // ------------------------------------------------------------------ 6
    criterion(6, "scaffold continuation c: 1 -> 1.21", [] {
        auto start = std::chrono::steady_clock::now();
        SimplicialPatch M = generateMesh("disk", 16);
        BoundaryData B = boundaryData(M);
        Scaffold W = Scaffold::quadric(2, Complex(1, 0));
        ContinuationOptions opt;
        opt.steps = 5;
        opt.tol = 1e-10;
        ContinuationResult r =
            continuationSolve(M, B, W, ScaffoldSection::quadricRadial(0.21), opt);
        double planar = std::max(r.state.positions.col(1).cwiseAbs().maxCoeff(),
                                 r.state.positions.col(3).cwiseAbs().maxCoeff());
        double radiusErr = 0.0;
        for (int v : M.boundaryVertices)
            radiusErr = std::max(radiusErr, std::abs(r.state.positions.row(v).norm() - 1.1));
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool ok = r.state.residualNorm() <= 1e-10 && planar <= 1e-6 && radiusErr <= 1e-6 &&
                  secs <= 60.0;
        return failUnless(ok, "residual = " + fmt17(r.state.residualNorm()) +
                                  ", plane = " + fmt17(planar) +
                                  ", radius err = " + fmt17(radiusErr));
    });

    // ------------------------------------------------------------------ 7
    criterion(7, "annulus moduli family", [] {
        SimplicialPatch M = generateMesh("annulus", 16);
        BoundaryData B = boundaryData(M);
        Scaffold W = annulusScaffold();
        DecOperators dec = DecOperators::build(M);
        HodgeSystem H(M, dec, B);
        DeformContext ctx(M, B, W);
        auto basis = moduliBasis(ctx, H);
        if (basis.size() != 1) return std::string("FAIL basis size = ") +
                                      std::to_string(basis.size());
        NewtonOptions opt;
        opt.tol = 1e-10;
        NewtonResult plus = moduliStep(ctx, H, basis[0], 0.01, opt);
        NewtonResult minus = moduliStep(ctx, H, basis[0], -0.01, opt);
        double confinement = 0.0;
        for (size_t i = 0; i < B.vertexIds.size(); ++i) {
            int v = B.vertexIds[i];
            int comp = ctx.scaffoldAssignment()[i];
            confinement = std::max(confinement, W.residual(comp, plus.state.positions.row(v)));
            confinement = std::max(confinement, W.residual(comp, minus.state.positions.row(v)));
        }
        double separation =
            (plus.state.positions - minus.state.positions).cwiseAbs().maxCoeff();
        double orth = std::max(plus.kernelComponent, minus.kernelComponent);
        bool ok = separation > 1e-4 && confinement <= 1e-10 && orth <= 1e-10;
        return failUnless(ok, "separation = " + fmt17(separation) +
                                  ", |F| = " + fmt17(confinement) +
                                  ", kernel component = " + fmt17(orth) + ", residuals = " +
                                  fmt17(plus.state.residualNorm()) + "/" +
                                  fmt17(minus.state.residualNorm()));
    });

    // ------------------------------------------------------------------ 8
    criterion(8, "adapted-metric geodesics + tangency", [] {
        // geodesics with W-tangent data stay on W over unit time
        Vec center = Vec::Zero(2);
        auto chart =
            std::make_shared<GraphChartComponent>(2, 0, 1, 0.0, 0.0, 0.35, -0.25, center);
        Scaffold Wg = Scaffold::graphChart(2, 0, 1, 0.0, 0.0, 0.35, -0.25, center);
        HatMetric g(chart, 0.4, 0.9);
        Vec w(2);
        w << 0.2, -0.1;
        Vec p = chart->embed(w, 0.0, 0.0);
        Vec vw(2);
        vw << 0.6, 0.3;
        Vec v = chart->liftDifferential(w) * vw;
        double geo = 0.0;
        for (const Vec& q : geodesicShoot(g, p, v, 1.0, 1000))
            geo = std::max(geo, Wg.residual(0, q));

        // admissible boundary fields are first-order tangent to W
        std::mt19937_64 rng(107);
        std::normal_distribution<double> N(0.0, 1.0);
        SimplicialPatch M = generateMesh("disk", 16);
        BoundaryData B = boundaryData(M);
        Scaffold W = Scaffold::quadric(2, Complex(1, 0));
        DeformContext ctx(M, B, W);
        double h = M.meshSize();
        double worstQuadric = 0.0;  // ratio |dF(V)| / (5 h |V|)
        for (int t = 0; t < 10; ++t) {
            Vec u(ctx.dofCount());
            for (int i = 0; i < u.size(); ++i) u[i] = N(rng);
            Mat field = ctx.fieldFromCoeffs(u);
            for (size_t i = 0; i < B.vertexIds.size(); ++i) {
                int vx = B.vertexIds[i];
                ScaffoldEval ev = W.eval(0, M.vertices.row(vx));
                Vec Vv = field.row(vx);
                if (Vv.norm() == 0.0) continue;
                double df = std::max(std::abs(ev.g1.dot(Vv)), std::abs(ev.g2.dot(Vv)));
                worstQuadric = std::max(worstQuadric, df / (5.0 * h * Vv.norm()));
            }
        }
        SimplicialPatch Mb = bowl(16, 0.4, -0.1);
        BoundaryData Bb = boundaryData(Mb);
        Scaffold Wa = Scaffold::affinePlane(2, 0, 1, 0.4, -0.1);
        DeformContext ctxB(Mb, Bb, Wa);
        double worstAffine = 0.0;
        for (int t = 0; t < 5; ++t) {
            Vec u(ctxB.dofCount());
            for (int i = 0; i < u.size(); ++i) u[i] = N(rng);
            Mat field = ctxB.fieldFromCoeffs(u);
            for (size_t i = 0; i < Bb.vertexIds.size(); ++i) {
                int vx = Bb.vertexIds[i];
                ScaffoldEval ev = Wa.eval(0, Mb.vertices.row(vx));
                Vec Vv = field.row(vx);
                worstAffine = std::max(
                    worstAffine, std::max(std::abs(ev.g1.dot(Vv)), std::abs(ev.g2.dot(Vv))));
            }
        }
        bool ok = geo <= 1e-6 && worstQuadric <= 1.0 && worstAffine <= 1e-10;
        return failUnless(ok, "geodesic |F| = " + fmt17(geo) +
                                  ", quadric tangency ratio = " + fmt17(worstQuadric) +
                                  ", affine |dF(V)| = " + fmt17(worstAffine));
    });

    // ------------------------------------------------------------------ 9
    criterion(9, "flow fidelity + symplecticity", [] {
        std::mt19937_64 rng(109);
        std::normal_distribution<double> N(0.0, 1.0);
        Scaffold W = Scaffold::quadric(2, Complex(1, 0));
        FlowSpec spec(W, 0, ScaffoldSection::quadricRadial(0.21), 0.4, 1.0);
        Ambient amb(2);
        double fidelity = 0.0;
        for (double psi : {0.0, 0.7, 2.1, 4.4}) {
            Vec p(4);
            p << std::cos(psi), 0, std::sin(psi), 0;
            Vec X = spec.sectionAt(p);
            const double tau = 1e-5;
            Vec fd = (spec.flow(p, tau) - spec.flow(p, -tau)) / (2 * tau);
            fidelity = std::max(fidelity, (fd - X).norm() / std::max(1.0, X.norm()));
        }
        double sympl = 0.0;
        const double h = 1e-5;
        for (int t = 0; t < 5; ++t) {
            Vec p(4);
            double psi = 0.9 * t;
            p << std::cos(psi), 0, std::sin(psi), 0;
            for (int i = 0; i < 4; ++i) p[i] += 0.03 * N(rng);
            Vec u(4), v(4);
            for (int i = 0; i < 4; ++i) u[i] = N(rng), v[i] = N(rng);
            u.normalize();
            v.normalize();
            auto push = [&](const Vec& dir) {
                return Vec((spec.flow(p + h * dir, 1.0) - spec.flow(p - h * dir, 1.0)) /
                           (2 * h));
            };
            sympl = std::max(sympl,
                             std::abs(amb.omega(push(u), push(v)) - amb.omega(u, v)));
        }
        bool ok = fidelity <= 1e-6 && sympl <= 1e-7;
        return failUnless(ok, "fidelity = " + fmt17(fidelity) +
                                  ", symplecticity = " + fmt17(sympl));
    });

    // ----------------------------------------------------------------- 10
    criterion(10, "structural DEC suite", [] {
        std::mt19937_64 rng(113);
        double ddMax = 0.0, stokesMax = 0.0, phaseMax = 0.0;
        for (const char* shape : {"disk", "annulus", "pants"}) {
            SimplicialPatch M = generateMesh(shape, 8);
            DecOperators dec = DecOperators::build(M);
            ddMax = std::max(ddMax, (Mat(dec.d(1)) * Mat(dec.d(0))).cwiseAbs().maxCoeff());
            for (int t = 0; t < 5; ++t) {
                Cochain beta = randomCochain(M, 1, rng);
                double lhs = dec.integrate(dec.coboundary(beta));
                stokesMax = std::max(stokesMax, std::abs(lhs - dec.boundaryIntegral(beta)) /
                                                    std::max(1.0, std::abs(lhs)));
            }
        }
        Ambient amb(2);
        std::normal_distribution<double> N(0.0, 1.0);
        for (int t = 0; t < 20; ++t) {
            Mat pts(3, 4);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 4; ++c) pts(r, c) = N(rng);
            double theta = N(rng);
            Complex lhs = amb.alphaIntegral(pts, theta);
            Complex rhs = std::exp(Complex(0, -theta)) * amb.alphaIntegral(pts, 0.0);
            phaseMax = std::max(phaseMax, std::abs(lhs - rhs));
        }
        bool ok = ddMax == 0.0 && stokesMax <= 1e-12 && phaseMax <= 1e-14;
        return failUnless(ok, "d.d = " + fmt17(ddMax) + ", stokes = " + fmt17(stokesMax) +
                                  ", phase = " + fmt17(phaseMax));
    });

    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures;
}
