#include "doctest.h"
#include "slag/flow.hpp"
#include "slag/meshgen.hpp"
#include "testutil.hpp"

#include <fstream>

using namespace slag;
using namespace slag::testutil;

namespace {

Vec unit4(int i) {
    Vec v = Vec::Zero(4);
    v[i] = 1.0;
    return v;
}

}  // namespace

TEST_CASE("section parsing") {
    ScaffoldSection r = ScaffoldSection::parse("radial(0.21)");
    CHECK(r.kind == ScaffoldSection::Kind::QuadricRadial);
    CHECK(r.delta == doctest::Approx(0.21));

    ScaffoldSection c = ScaffoldSection::parse("constant(1.5,-0.5)");
    CHECK(c.kind == ScaffoldSection::Kind::FrameConstant);
    CHECK(c.a1 == doctest::Approx(1.5));
    CHECK(c.a2 == doctest::Approx(-0.5));

    CHECK_THROWS_AS(ScaffoldSection::parse("spiral(1)"), ParseError);
    CHECK_THROWS_AS(ScaffoldSection::parse("/nonexistent/section.cfg"), ParseError);

    {
        std::ofstream out("section_test.cfg");
        out << "type = radial\ndelta = 0.1\n";
    }
    ScaffoldSection f = ScaffoldSection::parse("section_test.cfg");
    CHECK(f.kind == ScaffoldSection::Kind::QuadricRadial);
    CHECK(f.delta == doctest::Approx(0.1));
    std::remove("section_test.cfg");
}

TEST_CASE("hamiltonian of a constant section on an affine scaffold") {
    Scaffold W = Scaffold::affinePlane(2, 0, 1, 0.0, 0.0);
    // frame is (E, F) = (d/dx1, d/dy1); X = E
    FlowSpec spec(W, 0, ScaffoldSection::frameConstant(1.0, 0.0), 2.0, 4.0);

    SUBCASE("H = bump * s2 in tube coordinates") {
        Vec p(4);
        p << 0.3, 0.7, 2.0, -1.0;  // s1 = 0.3, s2 = 0.7
        CHECK(spec.hamiltonian(p) == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("the Hamiltonian field on W equals the section") {
        Vec p(4);
        p << 0.0, 0.0, 1.2, 0.4;
        Vec X = spec.hamiltonianField(p);
        CHECK((X - unit4(0)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("H vanishes identically outside the cutoff") {
        Vec p(4);
        p << 5.0, 3.0, 0.0, 0.0;  // |s| ~ 5.8 > rOut
        CHECK(spec.hamiltonian(p) == 0.0);
        CHECK(spec.hamiltonianField(p).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("analytic Hamiltonian gradient matches finite differences") {
    std::mt19937_64 rng(31);
    SUBCASE("quadric radial section") {
        Scaffold W = Scaffold::quadric(2, Complex(1, 0));
        FlowSpec spec(W, 0, ScaffoldSection::quadricRadial(0.21), 0.4, 1.0);
        for (int t = 0; t < 6; ++t) {
            Vec p(4);
            p << 1, 0, 0, 0;
            p += 0.05 * randomVec(4, rng);
            Vec X = spec.hamiltonianField(p);
            const double h = 1e-6;
            Vec fd(4);
            for (int i = 0; i < 4; ++i) {
                Vec pp = p, pm = p;
                pp[i] += h;
                pm[i] -= h;
                fd[i] = (spec.hamiltonian(pp) - spec.hamiltonian(pm)) / (2 * h);
            }
            Vec Xfd = Ambient(2).omegaMatrix() * fd;
            CHECK((X - Xfd).norm() <= 1e-6 * std::max(1.0, X.norm()));
        }
    }
}

TEST_CASE("time-one flow") {
    SUBCASE("zero section is the identity") {
        Scaffold W = Scaffold::quadric(2, Complex(1, 0));
        FlowSpec spec(W, 0, ScaffoldSection::quadricRadial(0.0), 0.4, 1.0);
        Vec p(4);
        p << 1, 0, 0, 0;
        CHECK((spec.flow(p, 1.0) - p).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("constant section on an affine scaffold translates by X") {
        Scaffold W = Scaffold::affinePlane(2, 0, 1, 0.0, 0.0);
        FlowSpec spec(W, 0, ScaffoldSection::frameConstant(1.0, 0.0), 2.0, 4.0);
        Vec p(4);
        p << 0.0, 0.0, -0.3, 0.9;
        Vec q = spec.flow(p, 1.0);
        CHECK((q - (p + unit4(0))).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("flow fidelity: the time derivative at t = 0 is the section") {
        Scaffold W = Scaffold::quadric(2, Complex(1, 0));
        FlowSpec spec(W, 0, ScaffoldSection::quadricRadial(0.21), 0.4, 1.0);
        for (double psi : {0.0, 0.7, 2.1}) {
            Vec p(4);
            p << std::cos(psi), 0, std::sin(psi), 0;
            Vec X = spec.sectionAt(p);
            const double tau = 1e-5;
            Vec fd = (spec.flow(p, tau) - spec.flow(p, -tau)) / (2 * tau);
            CHECK((fd - X).norm() <= 1e-6 * std::max(1.0, X.norm()));
        }
    }
    SUBCASE("radial flow carries the rim circle to the scaled quadric") {
        Scaffold W = Scaffold::quadric(2, Complex(1, 0));
        FlowSpec spec(W, 0, ScaffoldSection::quadricRadial(0.21), 0.4, 1.0);
        Scaffold W2 = Scaffold::quadric(2, Complex(1.21, 0));
        for (double psi : {0.0, 0.4, 1.9, 3.6}) {
            Vec p(4);
            p << std::cos(psi), 0, std::sin(psi), 0;
            Vec q = spec.flow(p, 1.0);
            CHECK(std::abs(q.norm() - 1.1) <= 1e-9);
            CHECK(W2.residual(0, q) <= 1e-8);
            // forward-backward consistency
            CHECK((spec.flow(q, -1.0) - p).cwiseAbs().maxCoeff() <= 1e-9);
        }
    }
}

TEST_CASE("discrete flow is symplectic") {
    std::mt19937_64 rng(37);
    Scaffold W = Scaffold::quadric(2, Complex(1, 0));
    FlowSpec spec(W, 0, ScaffoldSection::quadricRadial(0.21), 0.4, 1.0);
    Ambient amb(2);
    const double h = 1e-5;
    for (int t = 0; t < 5; ++t) {
        Vec p(4);
        double psi = 0.9 * t;
        p << std::cos(psi), 0, std::sin(psi), 0;
        p += 0.03 * randomVec(4, rng);
        Vec u = randomVec(4, rng).normalized();
        Vec v = randomVec(4, rng).normalized();
        auto push = [&](const Vec& dir) {
            return Vec((spec.flow(p + h * dir, 1.0) - spec.flow(p - h * dir, 1.0)) / (2 * h));
        };
        double before = amb.omega(u, v);
        double after = amb.omega(push(u), push(v));
        CHECK(std::abs(after - before) <= 1e-7);
    }
}

TEST_CASE("flow restricted to W pushes tangent frames symplectically") {
    Scaffold W = Scaffold::quadric(2, Complex(1, 0));
    FlowSpec spec(W, 0, ScaffoldSection::quadricRadial(0.21), 0.4, 1.0);
    Ambient amb(2);
    const double h = 1e-5;
    for (double psi : {0.2, 1.3}) {
        Vec p(4);
        p << std::cos(psi), 0, std::sin(psi), 0;
        Mat T = W.tangentBasis(0, p);
        auto push = [&](const Vec& dir) {
            return Vec((spec.flow(p + h * dir, 1.0) - spec.flow(p - h * dir, 1.0)) / (2 * h));
        };
        for (int i = 0; i < T.cols(); ++i)
            for (int j = i + 1; j < T.cols(); ++j) {
                double before = amb.omega(T.col(i), T.col(j));
                double after = amb.omega(push(T.col(i)), push(T.col(j)));
                CHECK(std::abs(after - before) <= 1e-7);
            }
    }
}

TEST_CASE("retraction onto the flowed scaffold") {
    Scaffold W = Scaffold::quadric(2, Complex(1, 0));
    FlowSpec spec(W, 0, ScaffoldSection::quadricRadial(0.21), 0.4, 1.0);
    FlowedScaffoldRetractor retractor(spec, 1.0);
    Vec p(4);
    p << 1.07, 0.01, 0.02, -0.01;  // near the flowed rim
    Vec q = retractor.project(0, p);
    CHECK(retractor.residual(0, q) <= 1e-10);
    // the differential is close to a projector: applying it twice is stable
    Mat dP = retractor.differential(0, q);
    CHECK((dP * dP - dP).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("continuation to the scaled quadric (scaffold deformation)") {
    SimplicialPatch M = generateMesh("disk", 16);
    BoundaryData B = boundaryData(M);
    Scaffold W = Scaffold::quadric(2, Complex(1, 0));

    SUBCASE("zero section returns the base state") {
        ContinuationOptions opt;
        opt.steps = 3;
        ContinuationResult r =
            continuationSolve(M, B, W, ScaffoldSection::quadricRadial(0.0), opt);
        CHECK((r.state.positions - M.vertices).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("radial continuation lands on radius 1.1") {
        ContinuationOptions opt;
        opt.steps = 5;
        ContinuationResult r =
            continuationSolve(M, B, W, ScaffoldSection::quadricRadial(0.21), opt);
        CHECK(r.reachedTime == doctest::Approx(1.0));
        CHECK(r.state.residualNorm() <= 1e-10);
        CHECK(r.scaffoldResidual <= 1e-10);
        CHECK(r.state.positions.col(1).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(r.state.positions.col(3).cwiseAbs().maxCoeff() <= 1e-6);
        for (int v : M.boundaryVertices)
            CHECK(std::abs(r.state.positions.row(v).norm() - 1.1) <= 1e-6);
    }
    SUBCASE("path consistency: 5 and 10 steps agree") {
        ContinuationOptions o5, o10;
        o5.steps = 5;
        o10.steps = 10;
        ContinuationResult r5 =
            continuationSolve(M, B, W, ScaffoldSection::quadricRadial(0.21), o5);
        ContinuationResult r10 =
            continuationSolve(M, B, W, ScaffoldSection::quadricRadial(0.21), o10);
        CHECK((r5.state.positions - r10.state.positions).cwiseAbs().maxCoeff() <= 1e-9);
    }
    SUBCASE("nonvanishing first Betti number is rejected") {
        SimplicialPatch A = generateMesh("annulus", 16);
        BoundaryData AB = boundaryData(A);
        Scaffold W2 = Scaffold::quadric(2, Complex(1, 0));
        W2.components.push_back(Scaffold::quadric(2, Complex(4, 0)).components[0]);
        CHECK_THROWS_AS(
            continuationSolve(A, AB, W2, ScaffoldSection::quadricRadial(0.1), {}),
            ValidationError);
    }
}
