#pragma once

#include "slag/scaffold.hpp"

namespace slag {

// Quintic smoothstep cutoff: 1 for r <= rIn, 0 for r >= rOut, C^2 between.
double bump(double r, double rIn, double rOut);

/* Adapted metric of a product-chart scaffold: in chart coordinates (w, s),
 *    g_1 = (pullback of g|_W at s = 0)  +  ds^1 (x) ds^1 + ds^2 (x) ds^2,
 * blended with the flat metric by the cutoff of the tube radius |s|:
 *    g_hat = bump g_1 + (1 - bump) g.
 * W = {s = 0} is totally geodesic for g_hat near the scaffold: the chart
 * blocks are s-independent, so the mixed Christoffel symbols vanish. */
class HatMetric {
public:
    HatMetric(std::shared_ptr<const GraphChartComponent> chart, double rIn, double rOut);

    // Metric matrix at a point, in ambient coordinates.
    Mat evaluate(const Vec& p) const;
    double cutoff(const Vec& p) const;
    double rIn() const { return rIn_; }
    double rOut() const { return rOut_; }
    const GraphChartComponent& chart() const { return *chart_; }

private:
    std::shared_ptr<const GraphChartComponent> chart_;
    double rIn_, rOut_;
};

// Fourth-order geodesic integration of the hat metric from (p, v) over time
// T with the given step count; returns the path (rows), starting at p.
// Christoffel symbols come from central differences of the metric.
std::vector<Vec> geodesicShoot(const HatMetric& g, const Vec& p, const Vec& v, double T,
                               int steps);

}  // namespace slag
