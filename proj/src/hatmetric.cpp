#include "slag/hatmetric.hpp"

#include <cmath>

namespace slag {

double bump(double r, double rIn, double rOut) {
    if (r <= rIn) return 1.0;
    if (r >= rOut) return 0.0;
    double t = (r - rIn) / (rOut - rIn);
    return 1.0 - (10.0 * t * t * t - 15.0 * t * t * t * t + 6.0 * t * t * t * t * t);
}

HatMetric::HatMetric(std::shared_ptr<const GraphChartComponent> chart, double rIn, double rOut)
    : chart_(std::move(chart)), rIn_(rIn), rOut_(rOut) {
    if (!chart_)
        throw ValidationError("deform.build_hat_metric: a product-chart scaffold is required");
    if (!(rIn_ > 0.0) || !(rOut_ > rIn_))
        throw ValidationError("deform.build_hat_metric: need 0 < r_in < r_out");
}

double HatMetric::cutoff(const Vec& p) const {
    auto s = chart_->sCoords(p);
    return bump(std::hypot(s[0], s[1]), rIn_, rOut_);
}

Mat HatMetric::evaluate(const Vec& p) const {
    const int D = static_cast<int>(p.size());
    Vec w = chart_->baseCoords(p);
    Mat L = chart_->liftDifferential(w);  // tangent lift of base velocities

    // ds rows and the w-selector in ambient coordinates.
    ScaffoldEval ev = chart_->eval(p);
    Mat A = Mat::Zero(D - 2, D);
    int j = 0;
    for (int i = 0; i < D; ++i) {
        if (i == chart_->axis(0) || i == chart_->axis(1)) continue;
        A(j++, i) = 1.0;
    }
    Mat g1 = A.transpose() * (L.transpose() * L) * A + ev.g1 * ev.g1.transpose() +
             ev.g2 * ev.g2.transpose();
    double b = cutoff(p);
    return b * g1 + (1.0 - b) * Mat::Identity(D, D);
}

namespace {

// Christoffel symbols by central differences of the metric.
void christoffel(const HatMetric& g, const Vec& p, std::vector<Mat>& gamma) {
    const int D = static_cast<int>(p.size());
    const double h = 1e-5;
    Mat G = g.evaluate(p);
    std::vector<Mat> dG(D);
    for (int m = 0; m < D; ++m) {
        Vec pp = p, pm = p;
        pp[m] += h;
        pm[m] -= h;
        dG[m] = (g.evaluate(pp) - g.evaluate(pm)) / (2.0 * h);
    }
    Mat Ginv = G.inverse();
    gamma.assign(D, Mat::Zero(D, D));
    for (int k = 0; k < D; ++k)
        for (int i = 0; i < D; ++i)
            for (int l = 0; l <= i; ++l) {
                double s = 0.0;
                for (int m = 0; m < D; ++m)
                    s += Ginv(k, m) * (dG[i](l, m) + dG[l](i, m) - dG[m](i, l));
                gamma[k](i, l) = 0.5 * s;
                gamma[k](l, i) = gamma[k](i, l);
            }
}

Vec acceleration(const HatMetric& g, const Vec& p, const Vec& v) {
    const int D = static_cast<int>(p.size());
    std::vector<Mat> gamma;
    christoffel(g, p, gamma);
    Vec a(D);
    for (int k = 0; k < D; ++k) a[k] = -v.dot(gamma[k] * v);
    return a;
}

}  // namespace

std::vector<Vec> geodesicShoot(const HatMetric& g, const Vec& p, const Vec& v, double T,
                               int steps) {
    if (steps < 1)
        throw ValidationError("deform.geodesic_shoot: need at least one step");
    double h = T / steps;
    Vec q = p, u = v;
    std::vector<Vec> path{q};
    for (int s = 0; s < steps; ++s) {
        // classical RK4 on the first-order system (q, u)
        Vec k1q = u, k1u = acceleration(g, q, u);
        Vec k2q = u + 0.5 * h * k1u, k2u = acceleration(g, q + 0.5 * h * k1q, u + 0.5 * h * k1u);
        Vec k3q = u + 0.5 * h * k2u, k3u = acceleration(g, q + 0.5 * h * k2q, u + 0.5 * h * k2u);
        Vec k4q = u + h * k3u, k4u = acceleration(g, q + h * k3q, u + h * k3u);
        q += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        u += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        if (!q.allFinite())
            throw SolveError("deform.geodesic_shoot: path left the chart");
        path.push_back(q);
    }
    return path;
}

}  // namespace slag
