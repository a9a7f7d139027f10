#pragma once

#include "slag/ambient.hpp"
#include "slag/mesh.hpp"

#include <array>
#include <memory>
#include <vector>

namespace slag {

// Values, gradients and Hessians of the two defining functions at a point.
struct ScaffoldEval {
    double F1 = 0.0, F2 = 0.0;
    Vec g1, g2;
    Mat H1, H2;
};

/* One connected piece of a scaffold: a regular level set {F1 = F2 = 0} of
 * codimension 2 with analytic derivatives. */
class ScaffoldComponent {
public:
    virtual ~ScaffoldComponent() = default;
    virtual ScaffoldEval eval(const Vec& p) const = 0;
    virtual std::string describe() const = 0;
};

// Complex quadric  sum_k w_k z_k^2 = c  via real and imaginary parts.
class QuadricComponent : public ScaffoldComponent {
public:
    QuadricComponent(int n, Complex c, std::vector<Complex> weights);
    ScaffoldEval eval(const Vec& p) const override;
    std::string describe() const override;
    Complex levelValue() const { return c_; }

private:
    int n_;
    Complex c_;
    std::vector<Complex> w_;
};

/* Graph chart  { p : p[axis_i] = h_i(w) },  h_i(w) = offset_i + amp_i |w - center|^2,
 * where w collects the remaining coordinates.  amp = 0 is an affine
 * coordinate plane; nonzero amp gives the curved-base product charts used by
 * the adapted-metric tests.  s_i(p) = F_i(p) are global tube coordinates. */
class GraphChartComponent : public ScaffoldComponent {
public:
    GraphChartComponent(int n, int axis1, int axis2, double off1, double off2, double amp1,
                        double amp2, Vec center);
    ScaffoldEval eval(const Vec& p) const override;
    std::string describe() const override;

    int axis(int i) const { return i == 0 ? axis1_ : axis2_; }
    // Chart splitting p -> (w, s1, s2) and its inverse.
    Vec baseCoords(const Vec& p) const;              // length 2n-2
    std::array<double, 2> sCoords(const Vec& p) const;
    Vec embed(const Vec& w, double s1, double s2) const;
    // Differential of w(p) composed with the graph lift: tangent of W at the
    // base point under a base velocity.
    Mat liftDifferential(const Vec& w) const;        // 2n x (2n-2)

private:
    double height(int i, const Vec& w) const;
    Vec heightGradient(int i, const Vec& w) const;   // in base coords
    int n_, axis1_, axis2_;
    double off_[2], amp_[2];
    Vec center_;
};

/* Codimension-2 level-set scaffold, possibly with several connected
 * components (e.g. one quadric per rim of an annulus).  Immutable. */
class Scaffold {
public:
    int n = 2;
    std::vector<std::shared_ptr<const ScaffoldComponent>> components;

    static Scaffold quadric(int n, Complex c, std::vector<Complex> weights = {});
    static Scaffold affinePlane(int n, int axis1, int axis2, double off1, double off2);
    static Scaffold graphChart(int n, int axis1, int axis2, double off1, double off2, double amp1,
                               double amp2, Vec center);

    // Structured key-value config (see README for the grammar).
    static Scaffold parse(std::istream& in, const std::string& name);
    static Scaffold load(const std::string& path);

    int componentCount() const { return static_cast<int>(components.size()); }
    ScaffoldEval eval(int comp, const Vec& p) const;
    double residual(int comp, const Vec& p) const;  // max(|F1|, |F2|)

    // Minimal-norm projection onto the component: Newton on the KKT system
    // q = p + grad^T lambda, F(q) = 0.  Throws SolveError when it does not
    // converge within 50 iterations or hits a singular gradient pair.
    Vec project(int comp, const Vec& p) const;
    // d project / d p at p (q = project(p)); exact via implicit
    // differentiation of the KKT system.
    Mat projectionDifferential(int comp, const Vec& p) const;

    // Orthonormal basis of T_qW (2n x (2n-2)) and the orthogonal projector.
    Mat tangentBasis(int comp, const Vec& q) const;
    Mat tangentProjector(int comp, const Vec& q) const;
    // Smallest singular value of omega restricted to T_qW.
    double restrictedOmegaMinSV(int comp, const Vec& q) const;

    // Deterministic symplectic frame of (T_qW)^omega with omega(E, F) = 1.
    std::pair<Vec, Vec> frame(int comp, const Vec& q) const;

private:
    struct KKTState;
};

// Assign each boundary vertex of M to the scaffold component whose residual
// over the vertex's rim is smallest; indexed like B.vertexIds.
std::vector<int> assignScaffoldComponents(const Scaffold& W, const SimplicialPatch& M,
                                          const BoundaryData& B);

/* Per-boundary-vertex residuals of the three scaffold conditions:
 * containment |F_i|, transversality max_t |omega(N, t)| over a tangent basis
 * of W, and frame validity (|omega(E,F) - 1| and max_t |omega(E or F, t)|).
 * Frame signs are propagated along each rim; loopConsistent records whether
 * the propagated choice closes up. */
struct ScaffoldConditionsReport {
    struct Row {
        int vertex = -1;
        int component = -1;
        double contain1 = 0.0, contain2 = 0.0;
        double transversality = 0.0;
        double frameOmega = 0.0, frameOrtho = 0.0;
    };
    std::vector<Row> rows;
    bool loopConsistent = true;
    double containTol = 1e-8;
    double transversalityTol = 1e-8;
    double frameTol = 1e-10;

    double maxContainment() const;
    double maxTransversality() const;
    double maxFrame() const;
    bool pass() const;
    std::string table() const;
};

ScaffoldConditionsReport checkScaffoldConditions(const Scaffold& W, const SimplicialPatch& M,
                                                 const BoundaryData& B);

// Oriented vertex loops of the boundary of a surface patch (n = 2).
std::vector<std::vector<int>> orderedBoundaryLoops(const SimplicialPatch& M);

}  // namespace slag
