#pragma once

#include "slag/deform.hpp"

namespace slag {

/* Section of (TW)^omega driving a scaffold deformation.  Built-ins:
 *   frame_constant  — constant coefficients (a1, a2) in the deterministic
 *                     scaffold frame (E, F)
 *   radial(delta)   — for quadric scaffolds: the Hamiltonian direction of
 *                     the imaginary defining function, scaled so the
 *                     time-one flow carries the real locus of { sum z^2 = c }
 *                     onto that of { sum z^2 = c + delta }
 * Sampled coefficient tables interpolate by inverse distance and fall back
 * to finite-difference Hamiltonian gradients. */
struct ScaffoldSection {
    enum class Kind { FrameConstant, QuadricRadial, Sampled };
    Kind kind = Kind::FrameConstant;
    double a1 = 0.0, a2 = 0.0;  // frame_constant
    double delta = 0.0;         // quadric radial
    Mat samplePoints;           // sampled: rows on W
    Mat sampleCoeffs;           // sampled: rows (a1, a2)

    static ScaffoldSection frameConstant(double a1, double a2);
    static ScaffoldSection quadricRadial(double delta);
    // Parses either "radial(0.21)" / "constant(a1,a2)" inline syntax or a
    // key-value config file.
    static ScaffoldSection parse(const std::string& inlineOrPath);

    bool isZero() const;
};

/* Hamiltonian flow mover of one scaffold component:
 *   H(p) = bump(|p - q|) * omega(X(q), p - q),   q = project_W(p),
 * whose Hamiltonian vector field restricted to W equals X.  Integration is
 * implicit midpoint with a fixed step count per unit time. */
class FlowSpec {
public:
    FlowSpec(const Scaffold& W, int component, ScaffoldSection X, double rIn, double rOut,
             int stepsPerUnitTime = 100);

    const Scaffold& scaffold() const { return *W_; }
    int component() const { return comp_; }
    double rIn() const { return rIn_; }
    double rOut() const { return rOut_; }

    // Section value at a point of W.
    Vec sectionAt(const Vec& q) const;
    double hamiltonian(const Vec& p) const;
    Vec hamiltonianField(const Vec& p) const;

    // Flow by `time` (possibly negative); implicit midpoint, deterministic.
    Vec flow(const Vec& p, double time) const;
    std::vector<Vec> flowPoints(const std::vector<Vec>& pts, double time) const;

    // Default cutoff radii from the mesh boundary diameter.
    static std::pair<double, double> defaultRadii(const SimplicialPatch& M,
                                                  const BoundaryData& B);

private:
    Vec gradHamiltonian(const Vec& p) const;
    const Scaffold* W_;
    int comp_;
    ScaffoldSection X_;
    double rIn_, rOut_;
    int stepsPerUnit_;
    Mat Omega_;
};

/* Retraction onto the flowed scaffold W_t = phi_t(W): pull back with the
 * inverse flow, project onto W, push forward.  Membership is measured by
 * F composed with the inverse flow. */
class FlowedScaffoldRetractor : public BoundaryRetractor {
public:
    FlowedScaffoldRetractor(const FlowSpec& spec, double time);
    Vec project(int component, const Vec& p) const override;
    Mat differential(int component, const Vec& p) const override;
    double residual(int component, const Vec& p) const override;

private:
    const FlowSpec* spec_;
    double time_;
};

struct ContinuationOptions {
    int steps = 5;
    double tol = 1e-10;
    int maxIter = 50;
    double rIn = 0.0, rOut = 0.0;  // 0: defaults from the mesh
    int flowStepsPerUnit = 100;
};

struct ContinuationResult {
    DeformationState state;     // final minimal Lagrangian state
    double reachedTime = 0.0;   // 1.0 on success
    double scaffoldResidual = 0.0;  // max |F o phi^{-1}| over the boundary
    std::vector<double> stepResiduals;
};

/* Continuation path: flow the scaffold by t X for t = 1/steps, ..., 1 and
 * re-solve from the previous solution.  Requires b^1(L) = 0. */
ContinuationResult continuationSolve(const SimplicialPatch& M, const BoundaryData& B,
                                     const Scaffold& W, const ScaffoldSection& X,
                                     const ContinuationOptions& opt);

}  // namespace slag
