#include "slag/ambient.hpp"

#include <cmath>

namespace slag {

Ambient::Ambient(int n) : n_(n) {
    if (n < 1)
        throw ValidationError("ambient: complex dimension must be at least 1");
}

void Ambient::checkDim(const Vec& u, const char* op) const {
    if (u.size() != dim())
        throw ValidationError(std::string("ambient.") + op + ": expected dimension " +
                              std::to_string(dim()) + ", got " + std::to_string(u.size()));
}

double Ambient::omega(const Vec& u, const Vec& v) const {
    checkDim(u, "omega_eval");
    checkDim(v, "omega_eval");
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
        s += u[2 * i] * v[2 * i + 1] - u[2 * i + 1] * v[2 * i];
    return s;
}

Vec Ambient::J(const Vec& u) const {
    checkDim(u, "J");
    Vec r(dim());
    for (int i = 0; i < n_; ++i) {
        r[2 * i] = -u[2 * i + 1];
        r[2 * i + 1] = u[2 * i];
    }
    return r;
}

Mat Ambient::omegaMatrix() const {
    Mat O = Mat::Zero(dim(), dim());
    for (int i = 0; i < n_; ++i) {
        O(2 * i, 2 * i + 1) = 1.0;
        O(2 * i + 1, 2 * i) = -1.0;
    }
    return O;
}

Eigen::VectorXcd Ambient::complexify(const Vec& u) const {
    checkDim(u, "complexify");
    Eigen::VectorXcd z(n_);
    for (int i = 0; i < n_; ++i)
        z[i] = Complex(u[2 * i], u[2 * i + 1]);
    return z;
}

Complex Ambient::alphaOnFrame(const Mat& frame) const {
    if (frame.rows() != dim() || frame.cols() != n_)
        throw ValidationError("ambient.alpha: frame must be 2n x n");
    Eigen::MatrixXcd Z(n_, n_);
    for (int c = 0; c < n_; ++c)
        Z.col(c) = complexify(frame.col(c));
    return Z.determinant();
}

double Ambient::omegaIntegral(const Vec& p0, const Vec& p1, const Vec& p2) const {
    // Constant-coefficient 2-form: the integral over the triangle is
    // omega(e1, e2) / 2 with e_i the edge vectors from p0.
    return 0.5 * omega(p1 - p0, p2 - p0);
}

Complex Ambient::alphaIntegral(const Mat& pts, double theta) const {
    if (pts.rows() != n_ + 1 || pts.cols() != dim())
        throw ValidationError("ambient.alpha_integral: expected (n+1) x 2n vertex matrix");
    Eigen::MatrixXcd Z(n_, n_);
    for (int c = 0; c < n_; ++c)
        Z.col(c) = complexify(Vec(pts.row(c + 1) - pts.row(0)));
    double fact = 1.0;
    for (int k = 2; k <= n_; ++k) fact *= k;
    return std::exp(Complex(0.0, -theta)) * Z.determinant() / fact;
}

double simplexVolume(const Mat& pts) {
    const int k = static_cast<int>(pts.rows()) - 1;
    if (k == 0) return 1.0;
    Mat E(pts.cols(), k);
    for (int c = 0; c < k; ++c)
        E.col(c) = pts.row(c + 1) - pts.row(0);
    Mat G = E.transpose() * E;
    double g = G.determinant();
    if (g < 0.0) g = 0.0;
    double fact = 1.0;
    for (int j = 2; j <= k; ++j) fact *= j;
    return std::sqrt(g) / fact;
}

double longestEdge(const Mat& pts) {
    double h = 0.0;
    for (int i = 0; i < pts.rows(); ++i)
        for (int j = i + 1; j < pts.rows(); ++j)
            h = std::max(h, (pts.row(i) - pts.row(j)).norm());
    return h;
}

double principalAngle(double theta) {
    const double twopi = 2.0 * M_PI;
    double t = std::fmod(theta, twopi);
    if (t <= -M_PI) t += twopi;
    if (t > M_PI) t -= twopi;
    return t;
}

}  // namespace slag
