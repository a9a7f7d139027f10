#pragma once

#include "slag/ambient.hpp"

#include <Eigen/Sparse>
#include <map>
#include <string>
#include <vector>

namespace slag {

using SparseMat = Eigen::SparseMatrix<double>;

/* Combinatorial face complex of a set of oriented top cells.
 *
 * Faces of every degree are stored as sorted vertex tuples; a cochain value
 * on such a face refers to the increasing-index orientation.  Top cells keep
 * their input orientation: parity[i] is the sign of the permutation that
 * sorts cell i, and the coboundary into top degree carries that sign so the
 * fundamental chain has coefficient +1 on every stored top cell.
 */
struct CellComplex {
    int dim = 0;
    std::vector<std::vector<std::vector<int>>> faces;       // faces[k]: sorted tuples
    std::vector<std::map<std::vector<int>, int>> index;     // tuple -> face id
    std::vector<int> parity;                                 // per top cell
    std::vector<SparseMat> d;                                // d[k]: C^k -> C^{k+1}

    // vertexSeedCount > 0 pre-seeds faces[0] with {0}, ..., {count-1} so that
    // 0-cochains index by vertex id.
    static CellComplex build(const std::vector<std::vector<int>>& topCells,
                             int vertexSeedCount = 0);

    int count(int k) const { return static_cast<int>(faces[k].size()); }
    // Face id and relative orientation sign of an arbitrarily ordered tuple.
    std::pair<int, int> locate(int k, std::vector<int> tuple) const;
};

// Sign of the permutation sorting tuple (0 if it has repeats).
int sortParity(std::vector<int>& tuple);

/* Discrete k-form: one value per k-face of a patch, relative to the sorted
 * orientation for k < n and to the stored top-cell orientation for k = n. */
struct Cochain {
    int degree = 0;
    Vec values;

    Cochain() = default;
    Cochain(int k, Vec v) : degree(k), values(std::move(v)) {}
    static Cochain zero(int k, int count) { return Cochain(k, Vec::Zero(count)); }
};

/* Oriented n-dimensional simplicial manifold-with-boundary embedded in
 * R^{2n}.  Validation enforces the manifold, orientability, degeneracy and
 * connectedness conditions; instances are immutable after construction. */
class SimplicialPatch {
public:
    // Validates and builds the face complex.  Throws ValidationError with the
    // offending simplex index on failure.
    static SimplicialPatch fromData(int n, Mat vertices, Eigen::MatrixXi simplices);

    int n = 0;                     // intrinsic dimension
    Mat vertices;                  // V x 2n
    Eigen::MatrixXi simplices;     // S x (n+1), input orientation
    CellComplex complex;

    std::vector<int> boundaryFaces;     // ids into complex.faces[n-1]
    std::vector<int> boundarySign;      // orientation induced by the fundamental chain
    std::vector<int> boundaryVertices;  // sorted vertex ids lying on the boundary

    int ambientDim() const { return static_cast<int>(vertices.cols()); }
    int vertexCount() const { return static_cast<int>(vertices.rows()); }
    int simplexCount() const { return static_cast<int>(simplices.rows()); }
    int faceCount(int k) const { return complex.count(k); }

    // Vertex positions of face id at degree k, one row per vertex.
    Mat facePoints(int k, int id) const;
    // Unsigned volume of face id at degree k.
    double faceVolume(int k, int id) const;
    // Longest edge over the whole patch.
    double meshSize() const;
    bool hasBoundary() const { return !boundaryFaces.empty(); }

    // Oriented boundary as a combinatorial (n-1)-complex over the same vertex
    // ids; top cells are ordered like boundaryFaces and oriented by the
    // induced orientation.
    CellComplex boundaryComplex() const;
    // Connected component label per boundary face (component count is
    // max+1); labels follow adjacency in the boundary complex.
    std::vector<int> boundaryComponents() const;

    // Copy with vertex positions replaced (same combinatorics); revalidates
    // simplex non-degeneracy only.
    SimplicialPatch withVertices(Mat newVertices) const;
};

/* Inward unit normals of the boundary: per boundary vertex, the unit vector
 * tangent to L, g-orthogonal to the averaged boundary tangent, pointing into
 * the patch. */
struct BoundaryData {
    std::vector<int> vertexIds;          // sorted boundary vertex ids
    Mat normals;                         // |B| x 2n, rows follow vertexIds
    Mat boundaryTangents;                // |B| x 2n averaged oriented rim tangent
    std::vector<int> componentOfVertex;  // boundary component per boundary vertex

    int indexOf(int vertexId) const;     // -1 if not a boundary vertex
};

// Identify boundary faces and compute per-vertex inward normals.  Throws on
// an empty boundary.
BoundaryData boundaryData(const SimplicialPatch& M);

// Ranks of simplicial homology with real coefficients.
std::pair<int, int> bettiNumbers(const SimplicialPatch& M);

// Degree-n cochain assigning each simplex its g-volume (fundamental
// orientation), so the plain sum is Vol(L).
Cochain volumeCochain(const SimplicialPatch& M);

// Signed sum of a degree-n cochain = pairing with the fundamental chain.
double integrateTop(const SimplicialPatch& M, const Cochain& c);

// Cochain value on an arbitrarily oriented vertex tuple (sign flips under
// orientation reversal).  Throws if the tuple is not a face of the patch.
double valueOn(const SimplicialPatch& M, const Cochain& c, std::vector<int> tuple);

// Per-vertex orthonormal tangent bases (2n x n each), from the area-weighted
// average of incident simplex plane projectors.
std::vector<Mat> vertexTangentBases(const SimplicialPatch& M);

// slmesh text format:
//   line 1:  slmesh <n> <V> <S>
//   V lines of 2n decimal coordinates, S lines of n+1 zero-based indices.
// Blank lines and '#' comments are ignored.
SimplicialPatch loadMesh(const std::string& path);
void saveMesh(const SimplicialPatch& M, const std::string& path);
SimplicialPatch parseMesh(std::istream& in, const std::string& name);

}  // namespace slag
