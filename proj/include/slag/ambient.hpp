#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace slag {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Complex = std::complex<double>;

// Error categories. Messages are prefixed "module.operation: ..." so that
// callers (and the CLI exit-code mapping) can tell where a failure came from.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/* Flat Calabi-Yau structure on R^{2n} identified with C^n.
 *
 * Coordinates are interleaved (x_1, y_1, ..., x_n, y_n).  The metric is the
 * identity, omega = sum_i dx_i ^ dy_i, J rotates each (x_i, y_i) block by
 * (x, y) -> (-y, x), and alpha = dz_1 ^ ... ^ dz_n with z_i = x_i + i y_i.
 * All coefficient fields are constant, so pullback integrals over affine
 * simplices are evaluated exactly.
 */
class Ambient {
public:
    explicit Ambient(int n);

    int n() const { return n_; }
    int dim() const { return 2 * n_; }

    // omega(u, v) = sum_i (u_{x_i} v_{y_i} - u_{y_i} v_{x_i})
    double omega(const Vec& u, const Vec& v) const;

    // Complex structure applied to a vector.
    Vec J(const Vec& u) const;

    double metric(const Vec& u, const Vec& v) const { return u.dot(v); }

    // Matrix O with omega(u, v) = u^T O v.
    Mat omegaMatrix() const;

    // z-components of a real vector: z_i = u_{x_i} + i u_{y_i}.
    Eigen::VectorXcd complexify(const Vec& u) const;

    // alpha evaluated on n ambient vectors (columns of frame).
    Complex alphaOnFrame(const Mat& frame) const;

    // Exact integral of omega over the oriented affine 2-simplex (p0, p1, p2).
    double omegaIntegral(const Vec& p0, const Vec& p1, const Vec& p2) const;

    // Exact integral of e^{-i theta} alpha over the oriented affine n-simplex
    // whose vertices are the rows of pts: e^{-i theta} det(Z) / n! where Z is
    // the complexified edge matrix.
    Complex alphaIntegral(const Mat& pts, double theta) const;

private:
    void checkDim(const Vec& u, const char* op) const;
    int n_;
};

// Unsigned k-volume of the affine simplex whose vertices are the rows of pts.
double simplexVolume(const Mat& pts);

// Longest edge of the simplex whose vertices are the rows of pts.
double longestEdge(const Mat& pts);

// Wrap an angle to the principal branch (-pi, pi].
double principalAngle(double theta);

}  // namespace slag
