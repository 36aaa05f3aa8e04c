#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hydrodp/energy.hpp"

namespace hydrodp {

// Economic parameters shared by every model. Quantities are in
// energy-equivalent units; prices are currency per energy unit.
struct CostParams {
    double thermal_price = 0.0;             // c
    double deficit_penalty = 0.0;           // p, must exceed c
    double thermal_cap = 0.0;               // K, thermal output per period
    std::vector<double> sale_prices;        // a_i, empty means no sales
    std::optional<double> demand_penalty;   // gamma, for the relaxed coupling

    double sale_price_at(int period) const {
        return sale_prices.empty() ? 0.0 : sale_prices[static_cast<std::size_t>(period)];
    }
    bool sales_enabled() const {
        for (double a : sale_prices)
            if (a > 0.0) return true;
        return false;
    }
};

struct Reservoir {
    double capacity = 0.0;      // Q_bar
    double initial_store = 0.0; // Q_1
    int level_count = 2;        // d, grid points 0, step, ..., capacity
    std::optional<HeadCurve> head_curve; // present iff the input is in volume units
    // Energy units per input volume unit, recorded by convert_to_energy_units
    // so serialization can write volume quantities back.
    double energy_rate = 1.0;

    double step() const { return capacity / static_cast<double>(level_count - 1); }
};

// Run-of-river station below the reservoir of a cascade. lateral_inflows[i]
// joins the river above this station in period i.
struct CascadeStation {
    double pass_capacity = 0.0;          // I
    std::vector<double> lateral_inflows; // xi_i, length n
};

// Finite inflow distribution for one period.
struct InflowDistribution {
    std::vector<double> support; // ascending, >= 0
    std::vector<double> weights; // sum to 1
};

struct DeterministicFlow {
    // inflows[j][i]: reservoir j, period i
    std::vector<std::vector<double>> inflows;
};

struct IndependentFlow {
    std::vector<InflowDistribution> per_period; // length n
    double confidence_level = 0.95;             // for the release-capping quantile
};

struct MarkovFlow {
    std::vector<double> bins;                              // shared support, ascending
    std::vector<std::vector<std::vector<double>>> transitions; // [period][from][to]
    std::vector<double> initial;                           // distribution of the pre-horizon bin
    double confidence_level = 0.95;
};

using FlowModel = std::variant<DeterministicFlow, IndependentFlow, MarkovFlow>;

struct Scenario {
    int n_periods = 0;
    std::vector<double> demands; // r_i, length n
    CostParams costs;
    std::vector<Reservoir> reservoirs;
    std::vector<CascadeStation> cascade_stations;
    FlowModel flow;
    int tau_days = 30; // days per period, used by the head-integration formula
    // False while reservoirs with head curves still carry volume units.
    bool in_energy_units = true;

    bool deterministic() const { return std::holds_alternative<DeterministicFlow>(flow); }
    const DeterministicFlow& det_flow() const { return std::get<DeterministicFlow>(flow); }
    const IndependentFlow& indep_flow() const { return std::get<IndependentFlow>(flow); }
    const MarkovFlow& markov_flow() const { return std::get<MarkovFlow>(flow); }
};

// Every invariant violation in the scenario, one message per violation,
// each naming the offending field. Empty result = valid. Pure.
std::vector<std::string> validate(const Scenario& scenario);

// Throws ValidationError listing all violations when the scenario is invalid.
void require_valid(const Scenario& scenario);

// Rescales every volume-denominated quantity of reservoirs that carry a head
// curve (capacity, initial store, inflows; plus cascade pass capacities and
// lateral inflows, which ride on the cascade reservoir's rate) into
// energy-equivalent units at the full-pool rate. Curves are kept for
// reference. No-op when the scenario is already in energy units.
void convert_to_energy_units(Scenario& scenario);

} // namespace hydrodp
