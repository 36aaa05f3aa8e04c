#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hydrodp/grid.hpp"
#include "hydrodp/scenario.hpp"

namespace hydrodp {

enum class Model {
    single,        // one reservoir, hard demand cap on the release
    cascade,       // one reservoir feeding run-of-river stations
    multi,         // reservoir chain, hard coupling sum(u) <= r
    multi_penalty, // reservoir chain, coupling relaxed into the stage cost
    aggregate,     // one scalar release split proportionally across reservoirs
    independent,   // stochastic single reservoir, independent inflows
    markov,        // stochastic single reservoir, Markov-chain inflows
};

const char* model_name(Model m);
// Returns the model for a CLI name ("single", ..., "multi-penalty"); throws
// ApplicabilityError for unknown names.
Model model_from_name(const std::string& name);

struct SolveOptions {
    // Release candidates sit on the state lattice refined by this factor.
    int control_refine = 1;
    // Aggregate-mode sweep resolution: M / (aggregate_refine * (max_j d_j - 1)).
    int aggregate_refine = 4;
    // Permits exact multi-reservoir solves beyond 3 reservoirs.
    bool allow_high_dimension = false;
};

struct SolveResult {
    Model model = Model::single;
    Grid grid;
    int inflow_bins = 1; // > 1 only for Markov tables
    std::vector<ValueTable> values;     // index i-1 holds stage i
    std::vector<PolicyTable> policies;
    std::vector<std::size_t> minimizations_per_stage; // one per stage
    std::vector<std::size_t> evaluations_per_stage;   // candidate evaluations
    double initial_value = 0.0; // f_1 at the initial stores (Markov: averaged)
    std::vector<std::string> notes;
    double wall_ms = 0.0;
};

// Inputs of the per-period cost term.
struct StageCostInputs {
    double demand = 0.0;
    double hydro_total = 0.0;
    CostParams costs;
    int period = 0; // 0-based
};

// c*clamp(r - h, 0, K) + p*max(0, r - h - K) - a_i*max(0, h - r).
// Thermal output is clamped at zero, so hydro beyond demand never earns the
// thermal price back.
double stage_cost(const StageCostInputs& inputs);

// Last-period closed form for the single-reservoir model: release
// min(r_n, Q_n + x_n) and its cost.
struct TerminalDecision {
    double cost = 0.0;
    double release = 0.0;
};
TerminalDecision terminal_stage(const Scenario& scenario, double store);

SolveResult solve_single(const Scenario& scenario, const SolveOptions& opts = {});
SolveResult solve_cascade(const Scenario& scenario, const SolveOptions& opts = {});
SolveResult solve_multi(const Scenario& scenario, bool penalty_mode,
                        const SolveOptions& opts = {});
SolveResult solve_aggregate(const Scenario& scenario, const SolveOptions& opts = {});
SolveResult solve_independent(const Scenario& scenario, const SolveOptions& opts = {});
SolveResult solve_markov(const Scenario& scenario, const SolveOptions& opts = {});

// Dispatch by model tag.
SolveResult solve(const Scenario& scenario, Model model, const SolveOptions& opts = {});

// Proportional-allocation transition of the aggregate model: successor
// stores min(capacity_j, (1 - u/M) * (store_j + inflow_j)) with
// M = sum_j (store_j + inflow_j). u > M throws std::domain_error; M = 0
// forces u = 0.
std::vector<double> allocate(std::span<const double> stores, std::span<const double> inflows,
                             std::span<const double> capacities, double release);

// Smallest support value whose cumulative weight reaches the confidence
// level; caps the admissible release range of the stochastic models.
double fidelity_bound(const InflowDistribution& dist, double confidence_level);

} // namespace hydrodp
