#pragma once

#include "slag/hodge.hpp"
#include "slag/scaffold.hpp"

#include <functional>
#include <memory>

namespace slag {

/* How boundary vertices are put back on the constraint set after a move.
 * The default wraps the scaffold's minimal-norm projection; the flow module
 * substitutes one that tracks a Hamiltonian image of the scaffold. */
class BoundaryRetractor {
public:
    virtual ~BoundaryRetractor() = default;
    virtual Vec project(int component, const Vec& p) const = 0;
    // d project / d p at the pre-projection point.
    virtual Mat differential(int component, const Vec& p) const = 0;
    // Constraint residual of a supposedly retracted point.
    virtual double residual(int component, const Vec& p) const = 0;
};

class ScaffoldRetractor : public BoundaryRetractor {
public:
    explicit ScaffoldRetractor(const Scaffold& W) : W_(&W) {}
    Vec project(int component, const Vec& p) const override { return W_->project(component, p); }
    Mat differential(int component, const Vec& p) const override {
        return W_->projectionDifferential(component, p);
    }
    double residual(int component, const Vec& p) const override {
        return W_->residual(component, p);
    }

private:
    const Scaffold* W_;
};

/* Base patch plus scaffold with the admissible-direction bookkeeping of the
 * deformation theory: per-vertex orthonormal bases of the constraint set
 * (g-normal space of L; at the boundary additionally omega(V, N) = 0). */
class DeformContext {
public:
    DeformContext(const SimplicialPatch& M, const BoundaryData& B, const Scaffold& W);

    const SimplicialPatch& patch() const { return *M_; }
    const BoundaryData& boundary() const { return *B_; }
    const Scaffold& scaffold() const { return *W_; }
    const Ambient& ambient() const { return amb_; }
    const std::vector<int>& scaffoldAssignment() const { return assignment_; }

    // The continuation path swaps in a flow-tracking retractor; the pointer
    // must outlive the context user.
    void setRetractor(const BoundaryRetractor* r) { retractor_ = r; }
    const BoundaryRetractor& retractor() const { return *retractor_; }

    int dofCount() const { return dofCount_; }
    int dofOffset(int vertex) const { return dofOffset_[vertex]; }
    const Mat& motionBasis(int vertex) const { return motionBasis_[vertex]; }
    int boundaryRow(int vertex) const { return B_->indexOf(vertex); }

    Mat fieldFromCoeffs(const Vec& u) const;         // V x 2n
    Vec coeffsFromField(const Mat& field) const;     // basis projection
    // NormalField invariants: interior normality, omega(V, N) = 0 and the
    // first-order scaffold tangency |dF_i(V)| <= 5 h |V|.
    void validateField(const Mat& field) const;

    // Move by the field, then put boundary vertices back on the scaffold.
    Mat retract(const Mat& field) const;

private:
    const SimplicialPatch* M_;
    const BoundaryData* B_;
    const Scaffold* W_;
    Ambient amb_;
    ScaffoldRetractor ownRetractor_;
    const BoundaryRetractor* retractor_;
    std::vector<int> assignment_;     // per boundary row
    std::vector<Mat> tangentBases_;   // per vertex, 2n x n
    std::vector<Mat> motionBasis_;    // per vertex, 2n x dof
    std::vector<int> dofOffset_;
    int dofCount_ = 0;
};

/* One configuration of the deformation problem: admissible field V, phase
 * angle theta, retracted positions, and the residual pair
 * (omega-integrals, -Im(e^{-i theta} alpha)-integrals) per 2-face / simplex. */
struct DeformationState {
    Mat field;
    double theta = 0.0;
    Mat positions;
    Cochain residualOmega;  // degree 2
    Cochain residualAlpha;  // degree n
    double normOmega = 0.0;
    double normAlpha = 0.0;

    double residualNorm() const { return std::max(normOmega, normAlpha); }
};

// Residual cochains of explicit vertex positions (no retraction).
std::pair<Cochain, Cochain> residualCochains(const SimplicialPatch& M, const Mat& positions,
                                             double theta);

DeformationState makeState(const DeformContext& ctx, const Mat& field, double theta);

// Phase angle that zeroes the total alpha-residual: the argument of the
// summed alpha-integral.
double bestFitTheta(const SimplicialPatch& M);

/* Exact derivative of the discrete residual at a state, including the
 * retraction differential at boundary vertices.  Columns are the admissible
 * dofs plus theta; at the flat base the theta column is also the
 * a Vol_L column of the linearized operator. */
class LinearizedOperator {
public:
    LinearizedOperator(const DeformContext& ctx, const DeformationState& at);

    const Mat& matrix() const { return J_; }              // 2T x (dof + 1)
    int thetaColumn() const { return ctx_->dofCount(); }

    // (V, a) -> (d eta_V, d star eta_V + a Vol): the linearization at zero.
    std::pair<Cochain, Cochain> apply(const Mat& field, double a) const;
    std::pair<Cochain, Cochain> applyCoeffs(const Vec& u, double a) const;

    // The omega block equals d_1 of the edge cochain of V -| omega; exposed
    // for the transcription test.
    static Cochain contractionCochain(const SimplicialPatch& M, const Mat& field);

private:
    const DeformContext* ctx_;
    Mat J_;
};

// The linearization at (V, theta) = (0, 0); requires the base patch to be
// special Lagrangian (residual norms <= 1e-8).
LinearizedOperator linearizeAtZero(const DeformContext& ctx);

struct NewtonOptions {
    double tol = 1e-10;
    int maxIter = 50;
    std::vector<Vec> deflateCoeffs;  // coefficient-space kernel directions
    // When positive, accept convergence once the damped step norm drops
    // below this: the residual has reached its least-squares floor.  Along
    // curved moduli directions that floor is the discretization error (flat
    // triangles only have exactly zero residual in planar configurations),
    // so the stall IS the discrete solution.
    double stallStep = 0.0;
};

struct NewtonResult {
    DeformationState state;
    int iterations = 0;
    bool stalled = false;         // stopped at the least-squares floor
    std::vector<double> history;  // residual sup-norms, initial first
    Vec totalStep;                // accumulated (coeffs, theta) correction
    double kernelComponent = 0.0;
};

NewtonResult newtonSolve(const DeformContext& ctx, const DeformationState& initial,
                         const NewtonOptions& opt);

// One admissible field per Neumann harmonic 1-form, normalized to unit
// sup-norm: V = J (sharp of eta) projected to the constraint set.
std::vector<Mat> moduliBasis(const DeformContext& ctx, const HodgeSystem& H);

// Newton from step * direction with the correction kept orthogonal to the
// moduli directions.
NewtonResult moduliStep(const DeformContext& ctx, const HodgeSystem& H, const Mat& direction,
                        double step, NewtonOptions opt = {});

}  // namespace slag
