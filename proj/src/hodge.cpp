#include "slag/hodge.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace slag {

namespace {

constexpr double kKernelRelTol = 1e-8;  // singular value < tol * largest => kernel

double maxRowNorm(const Mat& A) {
    double m = 0.0;
    for (int r = 0; r < A.rows(); ++r) m = std::max(m, A.row(r).norm());
    return m > 0.0 ? m : 1.0;
}

// Rank at the kernel threshold, with the spectrum-gap guard.
int thresholdRank(const Vec& sv, double thresh, const std::string& where) {
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++rank;
    if (rank > 0 && sv(rank - 1) < 10.0 * thresh)
        throw SolveError("hodge." + where +
                         ": ambiguous singular spectrum near the kernel threshold; refine the "
                         "mesh");
    return rank;
}

// Gram-Schmidt in the star inner product.
std::vector<Cochain> starOrthonormalize(const DecOperators& dec, int degree,
                                        std::vector<Vec> raw) {
    std::vector<Cochain> basis;
    for (Vec& v : raw) {
        Cochain c(degree, std::move(v));
        for (const Cochain& b : basis) c.values -= dec.inner(b, c) * b.values;
        double norm = std::sqrt(dec.inner(c, c));
        if (norm <= 0.0)
            throw SolveError("hodge.neumann_harmonic_basis: degenerate kernel vector");
        c.values /= norm;
        basis.push_back(std::move(c));
    }
    return basis;
}

}  // namespace

HodgeProblem HodgeProblem::zero(const SimplicialPatch& M) {
    HodgeProblem P;
    P.sigma = Cochain::zero(2, M.faceCount(2));
    P.tau = Cochain::zero(M.n, M.faceCount(M.n));
    return P;
}

bool SolvabilityReport::passAll() const {
    for (int c = 1; c <= 5; ++c)
        if (!pass(c)) return false;
    return true;
}

bool SolvabilityReport::passFirstFour() const {
    for (int c = 1; c <= 4; ++c)
        if (!pass(c)) return false;
    return true;
}

std::string SolvabilityReport::table() const {
    static const char* names[5] = {"(1) d sigma = 0", "(2) d tau = 0",
                                   "(3) tangential trace of tau", "(4) <sigma, star lambda>",
                                   "(5) <star tau, star kappa>"};
    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "solvability conditions (threshold %.6g)\n", threshold());
    os << buf;
    for (int c = 1; c <= 5; ++c) {
        std::snprintf(buf, sizeof(buf), "  %-29s %-13.6g %s\n", names[c - 1], residual[c - 1],
                      pass(c) ? "pass" : "FAIL");
        os << buf;
    }
    return os.str();
}

SolvabilityReport solvabilityReport(const SimplicialPatch& M, const DecOperators& dec,
                                    const HodgeProblem& P, double a,
                                    const std::vector<Cochain>& basisSigmaDegree) {
    if (P.tau.degree != M.n)
        throw ValidationError("hodge.solvability_report: tau must have degree n");
    SolvabilityReport rep;
    rep.inputScale =
        std::max({P.sigma.values.size() ? P.sigma.values.cwiseAbs().maxCoeff() : 0.0,
                  P.tau.values.size() ? P.tau.values.cwiseAbs().maxCoeff() : 0.0,
                  P.dualTarget ? P.dualTarget->cwiseAbs().maxCoeff() : 0.0, std::abs(a), 1e-30});

    // (1) d sigma = 0 (structural when sigma has top degree).
    rep.residual[0] = (P.sigma.degree < M.n)
                          ? dec.coboundary(P.sigma).values.cwiseAbs().maxCoeff()
                          : 0.0;
    // (2) d tau = 0 (structural: tau has top degree).
    rep.residual[1] =
        (P.tau.degree < M.n) ? dec.coboundary(P.tau).values.cwiseAbs().maxCoeff() : 0.0;
    // (3) tangential boundary trace of tau (structural at top degree).
    if (P.tau.degree <= M.n - 1) {
        Cochain tr = dec.boundaryTrace(P.tau);
        rep.residual[2] = tr.values.size() ? tr.values.cwiseAbs().maxCoeff() : 0.0;
    } else {
        rep.residual[2] = 0.0;
    }
    // (4) pairings of sigma against Neumann harmonic (k+1)-forms.
    double r4 = 0.0;
    for (const Cochain& lambda : basisSigmaDegree)
        r4 = std::max(r4, std::abs(dec.inner(P.sigma, lambda)));
    rep.residual[3] = r4;
    // (5) volume integrability: pair tau + a Vol against the constant 0-form.
    double vol = dec.integrate(volumeCochain(M));
    double tauTotal = P.dualTarget ? P.dualTarget->sum() : dec.integrate(P.tau);
    rep.residual[4] = std::abs(tauTotal + a * vol);
    return rep;
}

std::vector<Cochain> neumannHarmonicBasis(const SimplicialPatch& M, const DecOperators& dec,
                                          int k) {
    if (k < 0 || k > M.n)
        throw ValidationError("hodge.neumann_harmonic_basis: degree out of range");
    const int cols = M.faceCount(k);
    std::vector<Mat> blocks;
    if (k < M.n) {
        Mat D = Mat(dec.d(k));
        blocks.push_back(D / maxRowNorm(D));
    }
    if (k > 0) {
        Mat DD = Mat(dec.d(k - 1)).transpose() * dec.star(k).asDiagonal();
        blocks.push_back(DD / maxRowNorm(DD));
    }
    int rows = 0;
    for (const Mat& b : blocks) rows += static_cast<int>(b.rows());
    Mat A(rows, cols);
    int at = 0;
    for (const Mat& b : blocks) {
        A.middleRows(at, b.rows()) = b;
        at += static_cast<int>(b.rows());
    }
    // Full V: a wider-than-tall stack keeps part of its null space beyond
    // the min(rows, cols) singular triplets.
    Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = thresholdRank(sv, kKernelRelTol * sv(0), "neumann_harmonic_basis");
    std::vector<Vec> raw;
    for (int i = rank; i < cols; ++i) raw.push_back(svd.matrixV().col(i));
    return starOrthonormalize(dec, k, std::move(raw));
}

double integrabilityScalar(const Cochain& beta, const SimplicialPatch& M,
                           const DecOperators& dec) {
    if (beta.degree != M.n - 1)
        throw ValidationError("hodge.integrability_scalar: beta must have degree n-1");
    double vol = dec.integrate(volumeCochain(M));
    if (vol <= 0.0)
        throw ValidationError("hodge.integrability_scalar: zero volume");
    return -dec.integrate(dec.coboundary(beta)) / vol;
}

HodgeSystem::HodgeSystem(const SimplicialPatch& M, const DecOperators& dec,
                         const BoundaryData& B)
    : M_(&M), dec_(&dec), B_(&B) {
    if (M.n != 2)
        throw ValidationError("hodge.solve_bvp: the factored system is built for surfaces");
    const int T = M.faceCount(2), V = M.faceCount(0), E = M.faceCount(1);
    Mat D1 = Mat(dec.d(1));
    Mat DD = Mat(dec.dualDivergenceMatrix());
    wd_ = 1.0 / maxRowNorm(D1);
    wb_ = 1.0 / maxRowNorm(DD);
    stacked_.resize(T + V, E);
    stacked_.topRows(T) = wd_ * D1;
    stacked_.bottomRows(V) = wb_ * DD;
    svd_.compute(stacked_, Eigen::ComputeThinU | Eigen::ComputeFullV);

    const auto& sv = svd_.singularValues();
    svThreshold_ = kKernelRelTol * sv(0);
    int rank = thresholdRank(sv, svThreshold_, "solve_bvp");
    double kernelMax =
        std::max((rank < sv.size()) ? sv(rank) : 0.0, 2.2e-16 * sv(0));
    gap_ = sv(rank - 1) / kernelMax;

    std::vector<Vec> raw;
    for (int i = rank; i < E; ++i) raw.push_back(svd_.matrixV().col(i));
    basis_ = starOrthonormalize(dec, 1, std::move(raw));
    basis2_ = neumannHarmonicBasis(M, dec, 2);
    volume_ = dec.integrate(volumeCochain(M));
}

double HodgeSystem::chooseA(const HodgeProblem& P) const {
    if (!P.freeVolMultiplier) return P.fixedA;
    double total = P.dualTarget ? P.dualTarget->sum() : dec_->integrate(P.tau);
    return -total / volume_;
}

Vec HodgeSystem::dualRhs(const HodgeProblem& P, double a) const {
    Vec rhs = P.dualTarget ? *P.dualTarget : dec_->toDualCells(P.tau);
    rhs += a * dec_->star(0);
    return rhs;
}

SolvabilityReport HodgeSystem::solvability(const HodgeProblem& P) const {
    if (P.sigma.degree != 2)
        throw ValidationError("hodge.solvability_report: sigma must have degree 2");
    return solvabilityReport(*M_, *dec_, P, chooseA(P), basis2_);
}

HodgeSolution HodgeSystem::solve(const HodgeProblem& P) const {
    SolvabilityReport rep = solvability(P);
    if (!rep.passAll())
        throw SolveError("hodge.solve_bvp: solvability conditions fail\n" + rep.table());

    const int T = M_->faceCount(2), V = M_->faceCount(0);
    double a = chooseA(P);
    Vec dual = dualRhs(P, a);
    Vec rhs(T + V);
    rhs.head(T) = wd_ * P.sigma.values;
    rhs.tail(V) = wb_ * dual;

    // Truncated-SVD pseudoinverse: kernel directions excluded, minimum norm.
    const auto& sv = svd_.singularValues();
    Vec y = svd_.matrixU().transpose() * rhs;
    for (int i = 0; i < sv.size(); ++i) y[i] = (sv(i) > svThreshold_) ? y[i] / sv(i) : 0.0;
    Cochain eta(1, svd_.matrixV().leftCols(sv.size()) * y);

    HodgeSolution sol;
    sol.a = a;
    sol.harmonicCoefficients = Vec::Zero(kernelDim());
    for (int j = 0; j < kernelDim(); ++j) {
        sol.harmonicCoefficients[j] = dec_->inner(basis_[j], eta);
        eta.values -= sol.harmonicCoefficients[j] * basis_[j].values;
    }
    sol.eta = std::move(eta);
    sol.residualCurl = (dec_->d(1) * sol.eta.values - P.sigma.values).cwiseAbs().maxCoeff();
    sol.residualDiv =
        (dec_->dualDivergenceMatrix() * sol.eta.values - dual).cwiseAbs().maxCoeff();
    sol.residualNormal = dec_->normalComponent(sol.eta, *B_).cwiseAbs().maxCoeff();

    double tol = 1e-9 * std::max(rep.inputScale, 1e-30);
    if (std::max(sol.residualCurl, sol.residualDiv) > tol)
        throw SolveError("hodge.solve_bvp: least-squares residual " +
                         std::to_string(std::max(sol.residualCurl, sol.residualDiv)) +
                         " exceeds tolerance " + std::to_string(tol));
    return sol;
}

}  // namespace slag
