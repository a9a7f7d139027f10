#pragma once

#include "slag/dec.hpp"

#include <array>
#include <optional>

namespace slag {

/* Right-hand sides of the Neumann Hodge system
 *     d eta = sigma,   d star eta = tau + a Vol_L,   eta(N) = 0.
 * tau excludes the volume term; with freeVolMultiplier the solver chooses
 * a = -integral(tau) / Vol(L), otherwise fixedA is used.  dualTarget, when
 * set, replaces the dual-cell splitting of tau by raw dual-cell values (the
 * discrete output space of d star); it is how self-consistency right-hand
 * sides built from the operator itself are fed back in. */
struct HodgeProblem {
    Cochain sigma;  // degree k+1 = 2
    Cochain tau;    // degree n
    std::optional<Vec> dualTarget;
    bool freeVolMultiplier = false;
    double fixedA = 0.0;

    static HodgeProblem zero(const SimplicialPatch& M);
};

struct HodgeSolution {
    Cochain eta;            // degree 1, harmonic component removed
    double a = 0.0;
    double residualCurl = 0.0;    // ||d eta - sigma||_inf
    double residualDiv = 0.0;     // ||dual-divergence residual||_inf
    double residualNormal = 0.0;  // max |eta(N)| (Whitney), reported
    Vec harmonicCoefficients;     // star-components of the raw solution
};

/* The five solvability conditions of the Neumann Hodge system; for the
 * system's degrees on a surface, (1)-(3) are structural zeros, (4) pairs
 * sigma against Neumann harmonic (k+1)-forms and (5) is the volume
 * integrability condition paired against the constant 0-form. */
struct SolvabilityReport {
    double inputScale = 0.0;
    std::array<double, 5> residual{};
    double threshold() const { return 1e-9 * inputScale; }
    bool pass(int condition) const { return residual[condition - 1] <= threshold(); }
    bool passAll() const;
    bool passFirstFour() const;
    std::string table() const;
};

// Report for explicit a and a precomputed Neumann harmonic basis at degree
// sigma.degree (condition 4); works for any patch dimension.
SolvabilityReport solvabilityReport(const SimplicialPatch& M, const DecOperators& dec,
                                    const HodgeProblem& P, double a,
                                    const std::vector<Cochain>& basisSigmaDegree);

/* Stacked discrete Hodge operator of a patch at degree 1, factorized once.
 * The clipped-dual divergence block carries the Neumann condition weakly;
 * the Whitney normal trace is validated on outputs and reported.  Kernel
 * vectors are the discrete Neumann harmonic 1-forms.  Construction is the
 * single-writer step; solves are read-only. */
class HodgeSystem {
public:
    HodgeSystem(const SimplicialPatch& M, const DecOperators& dec, const BoundaryData& B);

    const SimplicialPatch& patch() const { return *M_; }
    const DecOperators& dec() const { return *dec_; }

    int kernelDim() const { return static_cast<int>(basis_.size()); }
    // Star-orthonormal Neumann harmonic 1-forms.
    const std::vector<Cochain>& harmonicBasis() const { return basis_; }
    // Ratio between the smallest non-kernel and largest kernel singular value.
    double kernelGap() const { return gap_; }

    HodgeSolution solve(const HodgeProblem& P) const;
    SolvabilityReport solvability(const HodgeProblem& P) const;

    double chooseA(const HodgeProblem& P) const;
    Vec dualRhs(const HodgeProblem& P, double a) const;

private:
    const SimplicialPatch* M_;
    const DecOperators* dec_;
    const BoundaryData* B_;
    Mat stacked_;                 // [wd d1; wb dualDiv]
    double wd_ = 1.0, wb_ = 1.0;  // block equilibration weights
    Eigen::BDCSVD<Mat> svd_;
    double svThreshold_ = 0.0;
    double gap_ = 0.0;
    double volume_ = 0.0;
    std::vector<Cochain> basis_;   // Neumann harmonic 1-forms
    std::vector<Cochain> basis2_;  // Neumann harmonic 2-forms (condition 4)
};

// Orthonormal basis (cochain inner product) of the Neumann harmonic k-forms:
// null space of the stacked [d_k; d_{k-1}^T star_k] system.  Throws a
// SolveError when the spectrum has no clean kernel gap.
std::vector<Cochain> neumannHarmonicBasis(const SimplicialPatch& M, const DecOperators& dec,
                                          int k);

// a = -integral(d beta) / Vol(L) for an (n-1)-cochain beta.
double integrabilityScalar(const Cochain& beta, const SimplicialPatch& M,
                           const DecOperators& dec);

}  // namespace slag
