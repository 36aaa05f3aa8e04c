#include "hydrodp/energy.hpp"

#include <algorithm>
#include <stdexcept>

namespace hydrodp {

double head_at(const HeadCurve& curve, double store) {
    if (store < 0.0) throw std::domain_error("head_at: negative store");
    const auto& pts = curve.points;
    if (store >= pts.back().store) return pts.back().head;
    // first point is at store 0, so store lands inside the table here
    auto hi = std::upper_bound(pts.begin(), pts.end(), store,
                               [](double s, const HeadCurvePoint& p) { return s < p.store; });
    const auto lo = hi - 1;
    const double span = hi->store - lo->store;
    const double t = (store - lo->store) / span;
    return lo->head * (1.0 - t) + hi->head * t;
}

double energy_of_release(const HeadCurve& curve, double store, double inflow,
                         double release, double capacity, int tau_days) {
    if (tau_days < 1) throw std::domain_error("energy_of_release: tau_days < 1");
    if (release < 0.0 || release > store + inflow)
        throw std::domain_error("energy_of_release: release outside [0, store + inflow]");
    const double tau = static_cast<double>(tau_days);
    const double daily_net = (inflow - release) / tau;
    const double daily_release = release / tau;
    double energy = 0.0;
    for (int t = 1; t <= tau_days; ++t) {
        double s = store + static_cast<double>(t) * daily_net;
        s = std::min(s, capacity);
        if (s < 0.0) s = 0.0; // release <= store + inflow keeps the final day at 0
        energy += head_at(curve, s) * daily_release;
    }
    return 9.8 * curve.efficiency * energy;
}

double full_pool_energy_rate(const HeadCurve& curve, double capacity) {
    return 9.8 * curve.efficiency * head_at(curve, capacity);
}

} // namespace hydrodp
