#pragma once

#include <cstdint>
#include <vector>

#include "hydrodp/scenario.hpp"
#include "hydrodp/solve.hpp"

namespace hydrodp {

// Ground-truth enumeration for small instances. Deliberately shares no code
// with the solvers: stage costs, transitions, and candidate lattices are
// re-derived locally as straight-line loops, so agreement actually checks
// something.

struct OracleOptions {
    double budget = 1e7; // maximum number of enumerated control sequences
    int control_refine = 1;
    int aggregate_refine = 4;
};

struct OracleResult {
    double cost = 0.0;
    // One entry per period; scalar models store one release, the chain model
    // stores one per reservoir. Lexicographically smallest minimizer.
    std::vector<std::vector<double>> releases;
};

// Exhaustive search over all release sequences on the candidate lattice of
// the given deterministic model. Throws BudgetError when the sequence count
// exceeds the budget.
OracleResult brute_force_optimum(const Scenario& scenario, Model model,
                                 const OracleOptions& opts = {});

// Minimal expected cost over nonanticipative policies on the inflow scenario
// tree (one control per history node, chosen before the period's inflow
// realizes). The scenario's flow model selects independent or Markov
// semantics. Throws BudgetError when the tree is too large.
double brute_force_stochastic(const Scenario& scenario, const OracleOptions& opts = {});

struct RolloutPeriod {
    std::vector<double> store_before; // per reservoir
    std::vector<double> inflow;       // per reservoir
    std::vector<double> release;      // water actually released, per control
    std::vector<double> spill;        // per reservoir
    double hydro = 0.0;
    double thermal = 0.0;
    double deficit = 0.0;
    double surplus = 0.0;
    double cost = 0.0;
};

struct RolloutTrace {
    std::vector<RolloutPeriod> periods;
    double total_cost = 0.0;
};

// Executes a solved policy forward under the realized inflows
// (inflows[reservoir][period]). Off-grid stores read the policy by
// piecewise-linear interpolation and re-clamp to the model's feasible range.
// Markov policies take n+1 values in inflows[0], the pre-horizon inflow
// first; realized values map to the nearest bin for the policy lookup.
RolloutTrace rollout(const Scenario& scenario, const SolveResult& solved,
                     const std::vector<std::vector<double>>& inflows);

// Seed-pinned sampler for stochastic single-reservoir scenarios: `count`
// inflow paths shaped as rollout expects (independent: n values; Markov:
// n+1 values starting with the pre-horizon draw). Deterministic scenarios
// yield `count` copies of the assumed series.
std::vector<std::vector<double>> sample_inflow_paths(const Scenario& scenario, int count,
                                                     std::uint64_t seed);

} // namespace hydrodp
