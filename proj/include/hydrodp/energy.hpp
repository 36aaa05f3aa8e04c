#pragma once

#include <vector>

namespace hydrodp {

struct HeadCurvePoint {
    double store = 0.0; // volume units
    double head = 0.0;  // meters
};

// Tabulated head-vs-store relation of a reservoir. Points are sorted by
// store, the first one sits at store 0, and heads never exceed max_head.
struct HeadCurve {
    std::vector<HeadCurvePoint> points;
    double efficiency = 1.0; // in (0, 1]
    double max_head = 0.0;   // meters
};

// Head at the given store by piecewise-linear interpolation of the table;
// stores beyond the last point use the last tabulated head. Negative store
// throws std::domain_error.
double head_at(const HeadCurve& curve, double store);

// Energy produced by releasing `release` volume units over `tau_days` days,
// starting from `store` with `inflow` arriving uniformly. The store is
// sampled at the end of each day, capped at `capacity`:
//
//   E = 9.8 * eta * sum_{t=1..tau} H(min(store + t*(inflow-release)/tau,
//                                        capacity)) * release / tau
//
// Preconditions: 0 <= release <= store + inflow, tau_days >= 1; violations
// throw std::domain_error.
double energy_of_release(const HeadCurve& curve, double store, double inflow,
                         double release, double capacity, int tau_days);

// Volume -> energy rate used when ingesting a volume-denominated reservoir:
// 9.8 * eta * H(capacity), the per-unit energy at full pool.
double full_pool_energy_rate(const HeadCurve& curve, double capacity);

} // namespace hydrodp
