#include "slag/cli.hpp"

#include "slag/deform.hpp"
#include "slag/flow.hpp"
#include "slag/io.hpp"
#include "slag/meshgen.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace slag {

namespace {

struct CommonOptions {
    int seed = 0;
    double tol = 1e-10;
    int maxIter = 50;
    bool quiet = false;
};

void header(std::ostream& out, const CommonOptions& c, const std::string& command) {
    if (c.quiet) return;
    out << "slag " << command << "\n";
    out << "seed = " << c.seed << "\n";
    out << "threads = " << threadWidth() << "\n";
}

/* Every solving subcommand checks the scaffold admissibility conditions first
 * The boundary is seated on the scaffold by projection before the check: a
 * solve may legitimately start with the rim off a moved scaffold, and the
 * retraction establishes containment; what must hold is that the seated rim
 * admits the symplectic frame and the transversality condition. */
void requireScaffoldConditions(std::ostream& out, const CommonOptions& c, const Scaffold& W,
                               const SimplicialPatch& M) {
    BoundaryData B0 = boundaryData(M);
    std::vector<int> assign = assignScaffoldComponents(W, M, B0);
    Mat pos = M.vertices;
    for (size_t i = 0; i < B0.vertexIds.size(); ++i) {
        int v = B0.vertexIds[i];
        Vec q;
        try {
            q = W.project(assign[i], pos.row(v));
        } catch (const SolveError& e) {
            throw ValidationError(
                std::string("cli.run: cannot seat the boundary on the scaffold: ") + e.what());
        }
        if (W.restrictedOmegaMinSV(assign[i], q) <= 1e-8)
            throw ValidationError(
                "cli.run: scaffold conditions fail: omega degenerates on the scaffold tangent "
                "space near the boundary");
        pos.row(v) = q.transpose();
    }
    SimplicialPatch seated = M.withVertices(pos);
    ScaffoldConditionsReport rep = checkScaffoldConditions(W, seated, boundaryData(seated));
    if (!c.quiet) out << rep.table();
    if (!rep.pass())
        throw ValidationError("cli.run: scaffold conditions fail (see report)");
}

void printState(std::ostream& out, const DeformationState& st) {
    out << "residual_omega_inf = " << fmt17(st.normOmega) << "\n";
    out << "residual_alpha_inf = " << fmt17(st.normAlpha) << "\n";
    out << "theta = " << fmt17(st.theta) << "\n";
}

}  // namespace

int threadWidth() {
    if (const char* env = std::getenv("SLAG_THREADS")) {
        char* end = nullptr;
        long w = std::strtol(env, &end, 10);
        if (end != env && w >= 1) return static_cast<int>(w);
    }
    return 1;
}

int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"slag: discrete minimal Lagrangian submanifolds with scaffolded boundary"};
    app.require_subcommand(1);
    CommonOptions common;
    app.add_option("--seed", common.seed, "seed recorded in reports and used by sampling checks");
    app.add_option("--tol", common.tol, "solver tolerance");
    app.add_flag("--quiet", common.quiet, "suppress report headers");

    auto* gen = app.add_subcommand("generate", "write a built-in test mesh (slmesh)");
    std::string genShape = "disk", genOut;
    int genRes = 16;
    gen->add_option("--shape", genShape, "disk | annulus | pants")->required();
    gen->add_option("--resolution", genRes, "angular/grid resolution (>= 4)");
    gen->add_option("--out", genOut, "output slmesh path")->required();

    auto* har = app.add_subcommand("harmonic", "Neumann harmonic k-form basis");
    std::string harMesh, harOut;
    int harDegree = 1;
    har->add_option("--mesh", harMesh)->required();
    har->add_option("--degree", harDegree, "form degree k");
    har->add_option("--out", harOut, "CSV for the basis columns");

    auto* chk = app.add_subcommand("check-slag", "minimal-Lagrangian residual of a mesh");
    std::string chkMesh;
    double chkTheta = 0.0;
    chk->add_option("--mesh", chkMesh)->required();
    chk->add_option("--theta", chkTheta, "phase angle (radians)");

    auto* slv = app.add_subcommand("solve", "Newton-solve for a minimal Lagrangian state");
    std::string slvMesh, slvScaffold, slvOut;
    slv->add_option("--mesh", slvMesh)->required();
    slv->add_option("--scaffold", slvScaffold)->required();
    slv->add_option("--max-iter", common.maxIter, "Newton iteration cap");
    slv->add_option("--out", slvOut, "output slmesh path")->required();

    auto* mod = app.add_subcommand("moduli", "walk each moduli direction");
    std::string modMesh, modScaffold, modOutDir;
    double modStep = 0.01;
    mod->add_option("--mesh", modMesh)->required();
    mod->add_option("--scaffold", modScaffold)->required();
    mod->add_option("--step", modStep, "step along each kernel direction");
    mod->add_option("--out-dir", modOutDir)->required();

    auto* flw = app.add_subcommand("scaffold-flow", "continuation onto a flowed scaffold");
    std::string flwMesh, flwScaffold, flwSection, flwOut;
    int flwSteps = 5;
    flw->add_option("--mesh", flwMesh)->required();
    flw->add_option("--scaffold", flwScaffold)->required();
    flw->add_option("--section", flwSection, "section config path or built-in, e.g. radial(0.21)")
        ->required();
    flw->add_option("--steps", flwSteps, "continuation steps");
    flw->add_option("--out", flwOut, "output slmesh path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            header(out, common, "generate");
            SimplicialPatch M = generateMesh(genShape, genRes);
            saveMesh(M, genOut);
            auto [b0, b1] = bettiNumbers(M);
            out << "vertices = " << M.vertexCount() << "\n";
            out << "simplices = " << M.simplexCount() << "\n";
            out << "boundary_faces = " << M.boundaryFaces.size() << "\n";
            out << "betti = (" << b0 << ", " << b1 << ")\n";
            out << "wrote " << genOut << "\n";
            return 0;
        }
        if (har->parsed()) {
            header(out, common, "harmonic");
            SimplicialPatch M = loadMesh(harMesh);
            DecOperators dec = DecOperators::build(M);
            out << "hodge_star = " << dec.starKind() << "\n";
            auto basis = neumannHarmonicBasis(M, dec, harDegree);
            out << "degree = " << harDegree << "\n";
            out << "dimension = " << basis.size() << "\n";
            if (!harOut.empty() && !basis.empty()) {
                std::vector<std::string> names;
                for (size_t j = 0; j < basis.size(); ++j)
                    names.push_back("basis_" + std::to_string(j));
                writeCochainCsv(harOut, M, basis, names);
                out << "wrote " << harOut << "\n";
            }
            return 0;
        }
        if (chk->parsed()) {
            header(out, common, "check-slag");
            SimplicialPatch M = loadMesh(chkMesh);
            auto [ro, ra] = residualCochains(M, M.vertices, chkTheta);
            out << "theta = " << fmt17(chkTheta) << "\n";
            out << "residual_omega_inf = " << fmt17(ro.values.cwiseAbs().maxCoeff()) << "\n";
            out << "residual_alpha_inf = " << fmt17(ra.values.cwiseAbs().maxCoeff()) << "\n";
            out << "best_fit_theta = " << fmt17(bestFitTheta(M)) << "\n";
            return 0;
        }
        if (slv->parsed()) {
            header(out, common, "solve");
            SimplicialPatch M = loadMesh(slvMesh);
            BoundaryData B = boundaryData(M);
            Scaffold W = Scaffold::load(slvScaffold);
            requireScaffoldConditions(out, common, W, M);
            DeformContext ctx(M, B, W);
            NewtonOptions opt;
            opt.tol = common.tol;
            opt.maxIter = common.maxIter;
            Mat zero = Mat::Zero(M.vertexCount(), M.ambientDim());
            NewtonResult r = newtonSolve(ctx, makeState(ctx, zero, bestFitTheta(M)), opt);
            out << "iterations = " << r.iterations << "\n";
            printState(out, r.state);
            saveMesh(M.withVertices(r.state.positions), slvOut);
            out << "wrote " << slvOut << "\n";
            return 0;
        }
        if (mod->parsed()) {
            header(out, common, "moduli");
            SimplicialPatch M = loadMesh(modMesh);
            BoundaryData B = boundaryData(M);
            Scaffold W = Scaffold::load(modScaffold);
            requireScaffoldConditions(out, common, W, M);
            DecOperators dec = DecOperators::build(M);
            out << "hodge_star = " << dec.starKind() << "\n";
            HodgeSystem H(M, dec, B);
            DeformContext ctx(M, B, W);
            auto basis = moduliBasis(ctx, H);
            out << "moduli_dimension = " << basis.size() << "\n";
            std::filesystem::create_directories(modOutDir);
            NewtonOptions opt;
            opt.tol = common.tol;
            opt.maxIter = common.maxIter;
            for (size_t j = 0; j < basis.size(); ++j) {
                NewtonResult r = moduliStep(ctx, H, basis[j], modStep, opt);
                std::string path = modOutDir + "/moduli_" + std::to_string(j) + ".slmesh";
                saveMesh(M.withVertices(r.state.positions), path);
                out << "direction " << j << ": residual = " << fmt17(r.state.residualNorm())
                    << (r.stalled ? " (discretization floor)" : "") << ", wrote " << path << "\n";
            }
            return 0;
        }
        if (flw->parsed()) {
            header(out, common, "scaffold-flow");
            SimplicialPatch M = loadMesh(flwMesh);
            BoundaryData B = boundaryData(M);
            Scaffold W = Scaffold::load(flwScaffold);
            requireScaffoldConditions(out, common, W, M);
            ContinuationOptions opt;
            opt.steps = flwSteps;
            opt.tol = common.tol;
            ContinuationResult r =
                continuationSolve(M, B, W, ScaffoldSection::parse(flwSection), opt);
            out << "reached_time = " << fmt17(r.reachedTime) << "\n";
            printState(out, r.state);
            out << "scaffold_residual = " << fmt17(r.scaffoldResidual) << "\n";
            saveMesh(M.withVertices(r.state.positions), flwOut);
            out << "wrote " << flwOut << "\n";
            return 0;
        }
    } catch (const SolveError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "error: cli.run: no subcommand executed\n";
    return 1;
}

}  // namespace slag
