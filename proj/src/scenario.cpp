#include "hydrodp/scenario.hpp"

#include <cmath>
#include <sstream>

#include "hydrodp/errors.hpp"

namespace hydrodp {
namespace {

constexpr double kProbabilityTol = 1e-9;

class Violations {
public:
    template <typename... Parts>
    void add(Parts&&... parts) {
        std::ostringstream os;
        (os << ... << parts);
        list_.push_back(os.str());
    }
    std::vector<std::string> take() { return std::move(list_); }

private:
    std::vector<std::string> list_;
};

bool finite_all(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void check_costs(const Scenario& s, Violations& out) {
    const CostParams& c = s.costs;
    if (!std::isfinite(c.thermal_price) || c.thermal_price < 0.0)
        out.add("costs.thermal_price: must be finite and >= 0");
    if (!std::isfinite(c.deficit_penalty) || !(c.deficit_penalty > c.thermal_price))
        out.add("costs.deficit_penalty: must exceed costs.thermal_price (p > c)");
    if (!std::isfinite(c.thermal_cap) || c.thermal_cap < 0.0)
        out.add("costs.thermal_cap: must be finite and >= 0");
    if (!c.sale_prices.empty()) {
        if (static_cast<int>(c.sale_prices.size()) != s.n_periods)
            out.add("costs.sale_prices: length ", c.sale_prices.size(), ", expected n_periods = ",
                    s.n_periods);
        for (std::size_t i = 0; i < c.sale_prices.size(); ++i) {
            const double a = c.sale_prices[i];
            if (!std::isfinite(a) || a < 0.0 || !(a < c.deficit_penalty))
                out.add("costs.sale_prices[", i, "]: must satisfy 0 <= a < deficit_penalty");
        }
    }
    if (c.demand_penalty && !(std::isfinite(*c.demand_penalty) && *c.demand_penalty > 0.0))
        out.add("costs.demand_penalty: must be > 0 when present");
}

void check_head_curve(const HeadCurve& h, std::size_t res_idx, Violations& out) {
    const std::string where = "reservoirs[" + std::to_string(res_idx) + "].head_curve";
    if (h.points.size() < 2) out.add(where, ".points: need at least 2 points");
    if (!h.points.empty() && h.points.front().store != 0.0)
        out.add(where, ".points: first point must be at store 0");
    for (std::size_t i = 0; i < h.points.size(); ++i) {
        const auto& p = h.points[i];
        if (!std::isfinite(p.store) || !std::isfinite(p.head) || p.head < 0.0)
            out.add(where, ".points[", i, "]: store/head must be finite, head >= 0");
        if (i > 0 && !(p.store > h.points[i - 1].store))
            out.add(where, ".points[", i, "]: stores must be strictly increasing");
        if (i > 0 && p.head < h.points[i - 1].head)
            out.add(where, ".points[", i, "]: heads must be non-decreasing");
        if (p.head > h.max_head)
            out.add(where, ".points[", i, "]: head exceeds max_head");
    }
    if (!(h.efficiency > 0.0 && h.efficiency <= 1.0))
        out.add(where, ".efficiency: must be in (0, 1]");
}

void check_reservoirs(const Scenario& s, Violations& out) {
    if (s.reservoirs.empty()) out.add("reservoirs: at least one reservoir required");
    for (std::size_t j = 0; j < s.reservoirs.size(); ++j) {
        const Reservoir& r = s.reservoirs[j];
        const std::string where = "reservoirs[" + std::to_string(j) + "]";
        if (!std::isfinite(r.capacity) || r.capacity <= 0.0)
            out.add(where, ".capacity: must be finite and > 0");
        if (!std::isfinite(r.initial_store) || r.initial_store < 0.0 ||
            r.initial_store > r.capacity)
            out.add(where, ".initial_store: must lie in [0, capacity]");
        if (r.level_count < 2) out.add(where, ".level_count: must be >= 2");
        if (r.head_curve) check_head_curve(*r.head_curve, j, out);
    }
}

void check_stations(const Scenario& s, Violations& out) {
    for (std::size_t j = 0; j < s.cascade_stations.size(); ++j) {
        const CascadeStation& st = s.cascade_stations[j];
        const std::string where = "cascade_stations[" + std::to_string(j) + "]";
        if (!std::isfinite(st.pass_capacity) || st.pass_capacity < 0.0)
            out.add(where, ".pass_capacity: must be finite and >= 0");
        if (static_cast<int>(st.lateral_inflows.size()) != s.n_periods)
            out.add(where, ".lateral_inflows: length ", st.lateral_inflows.size(),
                    ", expected n_periods = ", s.n_periods);
        for (std::size_t i = 0; i < st.lateral_inflows.size(); ++i)
            if (!std::isfinite(st.lateral_inflows[i]) || st.lateral_inflows[i] < 0.0)
                out.add(where, ".lateral_inflows[", i, "]: must be finite and >= 0");
    }
    if (!s.cascade_stations.empty()) {
        if (s.reservoirs.size() != 1)
            out.add("cascade_stations: cascade scenarios use exactly one reservoir");
        if (!s.deterministic())
            out.add("cascade_stations: cascade scenarios require deterministic flow");
        // With zero release the lateral inflows alone must not overshoot
        // demand, otherwise no feasible release exists in that period.
        // Comparable only once water and demand share energy units.
        if (s.in_energy_units && s.deterministic() &&
            static_cast<int>(s.demands.size()) == s.n_periods) {
            for (int i = 0; i < s.n_periods; ++i) {
                double cum = 0.0;
                double baseline = 0.0;
                bool lengths_ok = true;
                for (const auto& st : s.cascade_stations) {
                    if (static_cast<int>(st.lateral_inflows.size()) != s.n_periods) {
                        lengths_ok = false;
                        break;
                    }
                    cum += st.lateral_inflows[static_cast<std::size_t>(i)];
                    baseline += std::min(st.pass_capacity, cum);
                }
                if (lengths_ok && baseline > s.demands[static_cast<std::size_t>(i)])
                    out.add("cascade_stations.lateral_inflows: zero-release generation ",
                            baseline, " exceeds demands[", i, "] = ",
                            s.demands[static_cast<std::size_t>(i)],
                            "; no feasible release in period ", i);
            }
        }
    }
}

void check_distribution(const InflowDistribution& d, const std::string& where, Violations& out) {
    if (d.support.empty() || d.support.size() != d.weights.size()) {
        out.add(where, ": support and weights must be non-empty and equally long");
        return;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < d.support.size(); ++k) {
        if (!std::isfinite(d.support[k]) || d.support[k] < 0.0)
            out.add(where, ".support[", k, "]: must be finite and >= 0");
        if (k > 0 && !(d.support[k] > d.support[k - 1]))
            out.add(where, ".support[", k, "]: must be strictly ascending");
        if (!std::isfinite(d.weights[k]) || d.weights[k] < 0.0)
            out.add(where, ".weights[", k, "]: must be finite and >= 0");
        sum += d.weights[k];
    }
    if (std::abs(sum - 1.0) > kProbabilityTol)
        out.add(where, ".weights: sum to ", sum, ", expected 1 within 1e-9");
}

void check_flow(const Scenario& s, Violations& out) {
    if (const auto* det = std::get_if<DeterministicFlow>(&s.flow)) {
        if (det->inflows.size() != s.reservoirs.size())
            out.add("flow.inflows: one series per reservoir required (got ", det->inflows.size(),
                    ", expected ", s.reservoirs.size(), ")");
        for (std::size_t j = 0; j < det->inflows.size(); ++j) {
            const auto& series = det->inflows[j];
            if (static_cast<int>(series.size()) != s.n_periods)
                out.add("flow.inflows[", j, "]: length ", series.size(), ", expected n_periods = ",
                        s.n_periods);
            for (std::size_t i = 0; i < series.size(); ++i)
                if (!std::isfinite(series[i]) || series[i] < 0.0)
                    out.add("flow.inflows[", j, "][", i, "]: must be finite and >= 0");
        }
        return;
    }

    if (s.reservoirs.size() != 1)
        out.add("flow: stochastic flow models require exactly one reservoir");
    if (const auto* ind = std::get_if<IndependentFlow>(&s.flow)) {
        if (static_cast<int>(ind->per_period.size()) != s.n_periods)
            out.add("flow.distributions: length ", ind->per_period.size(),
                    ", expected n_periods = ", s.n_periods);
        for (std::size_t i = 0; i < ind->per_period.size(); ++i)
            check_distribution(ind->per_period[i], "flow.distributions[" + std::to_string(i) + "]",
                               out);
        if (!(ind->confidence_level > 0.0 && ind->confidence_level < 1.0))
            out.add("flow.confidence_level: must be in (0, 1)");
        return;
    }

    const auto& mk = std::get<MarkovFlow>(s.flow);
    const std::size_t bins = mk.bins.size();
    if (bins == 0) out.add("flow.bins: must be non-empty");
    for (std::size_t k = 0; k < bins; ++k) {
        if (!std::isfinite(mk.bins[k]) || mk.bins[k] < 0.0)
            out.add("flow.bins[", k, "]: must be finite and >= 0");
        if (k > 0 && !(mk.bins[k] > mk.bins[k - 1]))
            out.add("flow.bins[", k, "]: must be strictly ascending");
    }
    if (static_cast<int>(mk.transitions.size()) != s.n_periods)
        out.add("flow.transitions: length ", mk.transitions.size(), ", expected n_periods = ",
                s.n_periods);
    for (std::size_t i = 0; i < mk.transitions.size(); ++i) {
        const auto& m = mk.transitions[i];
        if (m.size() != bins) {
            out.add("flow.transitions[", i, "]: ", m.size(), " rows, expected ", bins);
            continue;
        }
        for (std::size_t row = 0; row < m.size(); ++row) {
            if (m[row].size() != bins) {
                out.add("flow.transitions[", i, "] row ", row, ": ", m[row].size(),
                        " entries, expected ", bins);
                continue;
            }
            double sum = 0.0;
            bool ok = true;
            for (double w : m[row]) {
                if (!std::isfinite(w) || w < 0.0) ok = false;
                sum += w;
            }
            if (!ok)
                out.add("flow.transitions[", i, "] row ", row, ": entries must be finite and >= 0");
            else if (std::abs(sum - 1.0) > kProbabilityTol)
                out.add("flow.transitions[", i, "] row ", row, ": sums to ", sum,
                        ", expected 1 within 1e-9");
        }
    }
    if (mk.initial.size() != bins)
        out.add("flow.initial: length ", mk.initial.size(), ", expected ", bins);
    else {
        double sum = 0.0;
        bool ok = true;
        for (double w : mk.initial) {
            if (!std::isfinite(w) || w < 0.0) ok = false;
            sum += w;
        }
        if (!ok) out.add("flow.initial: entries must be finite and >= 0");
        else if (std::abs(sum - 1.0) > kProbabilityTol)
            out.add("flow.initial: sums to ", sum, ", expected 1 within 1e-9");
    }
    if (!(mk.confidence_level > 0.0 && mk.confidence_level < 1.0))
        out.add("flow.confidence_level: must be in (0, 1)");
}

} // namespace

std::vector<std::string> validate(const Scenario& s) {
    Violations out;
    if (s.n_periods < 1) out.add("n_periods: must be >= 1");
    if (s.tau_days < 1) out.add("tau_days: must be >= 1");
    if (static_cast<int>(s.demands.size()) != s.n_periods)
        out.add("demands: length ", s.demands.size(), ", expected n_periods = ", s.n_periods);
    if (!finite_all(s.demands))
        out.add("demands: entries must be finite");
    for (std::size_t i = 0; i < s.demands.size(); ++i)
        if (s.demands[i] < 0.0) out.add("demands[", i, "]: must be >= 0");
    check_costs(s, out);
    check_reservoirs(s, out);
    check_stations(s, out);
    check_flow(s, out);
    return out.take();
}

void require_valid(const Scenario& s) {
    const auto violations = validate(s);
    if (violations.empty()) return;
    std::string msg = "invalid scenario:";
    for (const auto& v : violations) {
        msg += "\n  - ";
        msg += v;
    }
    throw ValidationError(msg);
}

void convert_to_energy_units(Scenario& s) {
    if (s.in_energy_units) return;
    auto* det = std::get_if<DeterministicFlow>(&s.flow);
    for (std::size_t j = 0; j < s.reservoirs.size(); ++j) {
        Reservoir& r = s.reservoirs[j];
        if (!r.head_curve) continue;
        const double rate = full_pool_energy_rate(*r.head_curve, r.capacity);
        r.energy_rate = rate;
        r.capacity *= rate;
        r.initial_store *= rate;
        if (det && j < det->inflows.size())
            for (double& x : det->inflows[j]) x *= rate;
        if (auto* ind = std::get_if<IndependentFlow>(&s.flow); ind && j == 0)
            for (auto& d : ind->per_period)
                for (double& x : d.support) x *= rate;
        if (auto* mk = std::get_if<MarkovFlow>(&s.flow); mk && j == 0)
            for (double& b : mk->bins) b *= rate;
        // Cascade water rides on the single reservoir's conversion rate.
        if (j == 0)
            for (CascadeStation& st : s.cascade_stations) {
                st.pass_capacity *= rate;
                for (double& xi : st.lateral_inflows) xi *= rate;
            }
    }
    s.in_energy_units = true;
}

} // namespace hydrodp
