#pragma once

#include "slag/mesh.hpp"

#include <string>

namespace slag {

/* Discrete exterior calculus operators of a patch: coboundary matrices,
 * diagonal Hodge stars (circumcentric dual when the mesh is well-centered,
 * barycentric dual otherwise), boundary traces and the Whitney vertex-field
 * reconstruction used by the Neumann condition eta(N) = 0.
 *
 * Dual cells are clipped at the boundary, so the per-vertex dual divergence
 * misses exactly the boundary flux eta(N); that omission is the weak form of
 * the Neumann condition and is what makes the discrete Stokes identities
 * exact.  Assembly is a pure function of the patch; applications are
 * read-only. */
class DecOperators {
public:
    static DecOperators build(const SimplicialPatch& M);

    const SimplicialPatch& patch() const { return *M_; }
    const std::string& starKind() const { return starKind_; }

    // Diagonal Hodge star entries at degree k: |dual cell| / |primal face|.
    const Vec& star(int k) const { return stars_.at(k); }
    // (-1)^{k(n-k)}: the sign of star-star at degree k.
    int starStarSign(int k) const;

    // d_k as a matrix, and applied to a cochain.
    const SparseMat& d(int k) const { return M_->complex.d.at(k); }
    Cochain coboundary(const Cochain& c) const;

    // Componentwise star: primal k-cochain to dual (n-k)-cochain values
    // (indexed like the primal k-faces).
    Cochain hodgeStar(const Cochain& c) const;

    // Signed sum of a top cochain (pairing with the fundamental chain).
    double integrate(const Cochain& c) const { return integrateTop(*M_, c); }

    // Restriction to the oriented boundary complex; values are indexed like
    // boundaryFaces for k = n-1 and like boundary().faces[k] below.
    const CellComplex& boundary() const { return boundary_; }
    Cochain boundaryTrace(const Cochain& c) const;
    // Integral of an (n-1)-cochain's trace over the whole boundary, and over
    // one boundary component.
    double boundaryIntegral(const Cochain& c) const;
    double boundaryIntegral(const Cochain& c, int component) const;

    // Per-vertex transcription of the dual-cell integral of d(star eta) for a
    // 1-cochain eta; rows sum to zero identically (discrete Stokes with the
    // Neumann flux omitted).
    Vec dualDivergence(const Cochain& eta) const;
    const SparseMat& dualDivergenceMatrix() const { return dualDiv_; }

    // Corner-area splitting of a primal n-cochain onto dual cells; preserves
    // the total integral exactly.
    Vec toDualCells(const Cochain& top) const;

    // Area-weighted Whitney vector field of a 1-cochain at the vertices.
    Mat whitneyVectors(const Cochain& eta) const;
    // eta(N) at the boundary vertices (rows follow B.vertexIds).
    Vec normalComponent(const Cochain& eta, const BoundaryData& B) const;
    // Matrix of the same map: rows = boundary vertices, cols = edges.
    Mat normalComponentMatrix(const BoundaryData& B) const;

    // Length of the dual cell's boundary segment on ∂L, per boundary vertex.
    const Vec& boundarySegmentLength() const { return boundarySegment_; }

    // Codifferential on 1-cochains (0-form output) including the boundary
    // flux, and the matching Green boundary term so that
    //   <df, eta>_1 = <f, delta eta>_0 + greenBoundaryTerm(f, eta)
    // holds exactly.
    Vec codifferential1(const Cochain& eta, const BoundaryData& B) const;
    double greenBoundaryTerm(const Cochain& f, const Cochain& eta, const BoundaryData& B) const;

    // Star-weighted inner product of two k-cochains.
    double inner(const Cochain& a, const Cochain& b) const;

private:
    const SimplicialPatch* M_ = nullptr;
    std::string starKind_;
    std::vector<Vec> stars_;
    SparseMat dualDiv_;          // -d0^T star1
    SparseMat cornerAreas_;      // V x S
    Vec boundarySegment_;        // per boundary vertex
    CellComplex boundary_;

    void checkDegree(const Cochain& c, int k, const char* op) const;
};

}  // namespace slag
