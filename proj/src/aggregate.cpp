// Dimensionality-avoiding heuristic: one scalar release per period, split
// across reservoirs in proportion to their potential (store + inflow), so
// every stage costs exactly one 1-D minimization per grid state.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <stdexcept>

#include "hydrodp/errors.hpp"
#include "hydrodp/kernels.hpp"
#include "hydrodp/parallel.hpp"
#include "hydrodp/solve.hpp"
#include "solve_detail.hpp"

namespace hydrodp {
namespace {

using Clock = std::chrono::steady_clock;

// Successor stores for scalar release u out of potential M.
inline void allocate_into(std::span<const double> stores, std::span<const double> inflows,
                          std::span<const double> capacities, double release, double potential,
                          double* out) {
    const double share = potential > 0.0 ? release / potential : 0.0;
    for (std::size_t j = 0; j < stores.size(); ++j) {
        const double next = (1.0 - share) * (stores[j] + inflows[j]);
        out[j] = std::min(capacities[j], next);
    }
}

} // namespace

std::vector<double> allocate(std::span<const double> stores, std::span<const double> inflows,
                             std::span<const double> capacities, double release) {
    double potential = 0.0;
    for (std::size_t j = 0; j < stores.size(); ++j) potential += stores[j] + inflows[j];
    if (release < 0.0 || release > potential)
        throw std::domain_error("allocate: release outside [0, potential]");
    std::vector<double> out(stores.size());
    allocate_into(stores, inflows, capacities, release, potential, out.data());
    return out;
}

SolveResult solve_aggregate(const Scenario& s, const SolveOptions& opts) {
    require_valid(s);
    detail::check_options(opts.control_refine, opts.aggregate_refine);
    if (s.reservoirs.size() > 8)
        throw ApplicabilityError("aggregate: at most 8 reservoirs are supported");
    if (!s.cascade_stations.empty())
        throw ApplicabilityError("aggregate: does not accept cascade stations");
    if (!s.deterministic())
        throw ApplicabilityError("aggregate: requires deterministic inflows");

    const auto start = Clock::now();
    const int n = s.n_periods;
    const int m_res = static_cast<int>(s.reservoirs.size());
    const Grid grid = Grid::from_reservoirs(s.reservoirs);
    const std::size_t D = grid.size();
    const auto& flows = s.det_flow().inflows;
    const auto& ops = kernels::active();

    int max_levels = 2;
    for (const Reservoir& r : s.reservoirs) max_levels = std::max(max_levels, r.level_count);
    const double sweep_div =
        static_cast<double>(opts.aggregate_refine) * static_cast<double>(max_levels - 1);

    std::vector<double> caps(static_cast<std::size_t>(m_res));
    for (int j = 0; j < m_res; ++j)
        caps[static_cast<std::size_t>(j)] = s.reservoirs[static_cast<std::size_t>(j)].capacity;

    SolveResult result;
    result.model = Model::aggregate;
    result.grid = grid;
    result.values.resize(static_cast<std::size_t>(n));
    result.policies.resize(static_cast<std::size_t>(n));
    result.minimizations_per_stage.assign(static_cast<std::size_t>(n), D);
    result.evaluations_per_stage.assign(static_cast<std::size_t>(n), 0);

    for (int i = n - 1; i >= 0; --i) {
        auto& vt = result.values[static_cast<std::size_t>(i)];
        auto& pt = result.policies[static_cast<std::size_t>(i)];
        vt.stage = i + 1;
        pt.stage = i + 1;
        vt.values.resize(D);
        pt.controls.resize(D);
        const bool terminal = (i == n - 1);
        const auto costs = kernels::StageCostParams{
            s.demands[static_cast<std::size_t>(i)], s.costs.thermal_price,
            s.costs.deficit_penalty, s.costs.thermal_cap,
            detail::sale_coefficient(s.costs, i)};

        std::atomic<std::uint64_t> evals{0};
        parallel_for(D, [&](std::size_t begin, std::size_t end) {
            detail::Scratch sc;
            std::vector<double> stores(static_cast<std::size_t>(m_res));
            std::vector<double> inflow(static_cast<std::size_t>(m_res));
            std::vector<double> succ(static_cast<std::size_t>(m_res));
            std::vector<int> idx(static_cast<std::size_t>(m_res));
            std::uint64_t my_evals = 0;
            for (std::size_t state = begin; state < end; ++state) {
                grid.unflatten(state, idx);
                double potential = 0.0;
                for (int j = 0; j < m_res; ++j) {
                    const auto ja = static_cast<std::size_t>(j);
                    stores[ja] = grid.store(j, idx[ja]);
                    inflow[ja] = flows[ja][static_cast<std::size_t>(i)];
                    potential += stores[ja] + inflow[ja];
                }
                detail::fill_candidates(sc.u, potential, potential / sweep_div);
                // Add the stage-cost kinks, and for a lone reservoir the
                // releases that land the successor on a grid node; the sweep
                // then finds exact optima on lattice-aligned instances.
                const auto push_extra = [&](double v) {
                    if (v > 0.0 && v < potential) sc.u.push_back(v);
                };
                push_extra(costs.demand);
                push_extra(costs.demand - costs.thermal_cap);
                if (m_res == 1)
                    for (int k = 0; k < grid.levels[0]; ++k)
                        push_extra(potential - grid.store(0, k));
                std::sort(sc.u.begin(), sc.u.end());
                sc.u.erase(std::unique(sc.u.begin(), sc.u.end()), sc.u.end());
                const std::size_t m = sc.u.size();
                sc.cost.resize(m);
                sc.tot.resize(m);
                ops.stage_cost(sc.u.data(), sc.cost.data(), m, costs);
                if (terminal) {
                    sc.tot.assign(sc.cost.begin(), sc.cost.end());
                } else {
                    const auto& fnext = result.values[static_cast<std::size_t>(i + 1)].values;
                    for (std::size_t c = 0; c < m; ++c) {
                        allocate_into(stores, inflow, caps, sc.u[c], potential, succ.data());
                        sc.tot[c] = sc.cost[c] + value_at(fnext, grid, succ);
                    }
                }
                const std::size_t best = ops.argmin(sc.tot.data(), m);
                vt.values[state] = sc.tot[best];
                pt.controls[state] = sc.u[best];
                my_evals += m;
            }
            evals.fetch_add(my_evals, std::memory_order_relaxed);
        });
        result.evaluations_per_stage[static_cast<std::size_t>(i)] = evals.load();
    }

    std::vector<double> q1(static_cast<std::size_t>(m_res));
    for (int j = 0; j < m_res; ++j)
        q1[static_cast<std::size_t>(j)] = s.reservoirs[static_cast<std::size_t>(j)].initial_store;
    result.initial_value = value_at(result.values[0].values, grid, q1);
    result.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return result;
}

} // namespace hydrodp
