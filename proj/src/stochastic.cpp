// Stochastic single-reservoir solvers over discrete inflow distributions:
// independent per-period inflows and a first-order Markov chain. The release
// is decided before the period's inflow realizes; its admissible interval is
// capped by the distribution's confidence quantile. When a realized inflow
// leaves less water than the planned release, the successor clamps at zero
// and the undelivered part is repriced at the deficit penalty in that branch.

#include <algorithm>
#include <atomic>
#include <chrono>

#include "hydrodp/errors.hpp"
#include "hydrodp/kernels.hpp"
#include "hydrodp/parallel.hpp"
#include "hydrodp/solve.hpp"
#include "solve_detail.hpp"

namespace hydrodp {
namespace {

using Clock = std::chrono::steady_clock;

void require_stochastic_shape(const Scenario& s, const char* model) {
    require_valid(s);
    if (s.reservoirs.size() != 1)
        throw ApplicabilityError(std::string(model) + ": requires exactly one reservoir");
    if (!s.cascade_stations.empty())
        throw ApplicabilityError(std::string(model) + ": does not accept cascade stations");
}

} // namespace

double fidelity_bound(const InflowDistribution& dist, double confidence_level) {
    double cum = 0.0;
    for (std::size_t k = 0; k < dist.support.size(); ++k) {
        cum += dist.weights[k];
        if (cum >= confidence_level) return dist.support[k];
    }
    return dist.support.back();
}

SolveResult solve_independent(const Scenario& s, const SolveOptions& opts) {
    require_stochastic_shape(s, "independent");
    detail::check_options(opts.control_refine, opts.aggregate_refine);
    const auto* flow = std::get_if<IndependentFlow>(&s.flow);
    if (!flow) throw ApplicabilityError("independent: scenario flow model is not independent");

    const auto start = Clock::now();
    const Reservoir& res = s.reservoirs[0];
    const int n = s.n_periods;
    const int d = res.level_count;
    const double dq = res.step();
    const double dc = dq / static_cast<double>(opts.control_refine);
    const double qbar = res.capacity;
    const double p = s.costs.deficit_penalty;
    const auto& ops = kernels::active();

    SolveResult result;
    result.model = Model::independent;
    result.grid = Grid::from_reservoirs(s.reservoirs);
    result.values.resize(static_cast<std::size_t>(n));
    result.policies.resize(static_cast<std::size_t>(n));
    result.minimizations_per_stage.assign(static_cast<std::size_t>(n),
                                          static_cast<std::size_t>(d));
    result.evaluations_per_stage.assign(static_cast<std::size_t>(n), 0);

    for (int i = n - 1; i >= 0; --i) {
        auto& vt = result.values[static_cast<std::size_t>(i)];
        auto& pt = result.policies[static_cast<std::size_t>(i)];
        vt.stage = i + 1;
        pt.stage = i + 1;
        vt.values.resize(static_cast<std::size_t>(d));
        pt.controls.resize(static_cast<std::size_t>(d));
        const bool terminal = (i == n - 1);
        const double* fnext =
            terminal ? nullptr : result.values[static_cast<std::size_t>(i + 1)].values.data();
        const InflowDistribution& dist = flow->per_period[static_cast<std::size_t>(i)];
        const double bound = fidelity_bound(dist, flow->confidence_level);
        const double r = s.demands[static_cast<std::size_t>(i)];
        const auto costs = kernels::StageCostParams{
            r, s.costs.thermal_price, p, s.costs.thermal_cap,
            detail::sale_coefficient(s.costs, i)};

        std::atomic<std::uint64_t> evals{0};
        std::atomic<std::uint64_t> offgrid{0};
        parallel_for(static_cast<std::size_t>(d), [&](std::size_t begin, std::size_t end) {
            detail::Scratch sc;
            std::uint64_t my_evals = 0;
            std::uint64_t my_offgrid = 0;
            for (std::size_t k = begin; k < end; ++k) {
                const double q = result.grid.store(0, static_cast<int>(k));
                detail::fill_candidates(sc.u, std::min(r, q + bound), dc);
                const std::size_t m = sc.u.size();
                sc.cost.resize(m);
                sc.succ.resize(m);
                sc.cont.resize(m);
                sc.pen.resize(m);
                sc.tmp.resize(m);
                sc.tot.resize(m);
                sc.acc.assign(m, 0.0);
                ops.stage_cost(sc.u.data(), sc.cost.data(), m, costs);
                for (std::size_t b = 0; b < dist.support.size(); ++b) {
                    const double x = dist.support[b];
                    ops.relu_scaled(sc.u.data(), sc.pen.data(), m, q + x, p);
                    if (terminal) {
                        ops.axpy(dist.weights[b], sc.pen.data(), sc.acc.data(), m);
                        continue;
                    }
                    ops.shift_clamp(sc.u.data(), sc.succ.data(), m, q + x, 0.0, qbar);
                    ops.interp1(fnext, d, dq, sc.succ.data(), sc.cont.data(), m);
                    ops.add(sc.cont.data(), sc.pen.data(), sc.tmp.data(), m);
                    ops.axpy(dist.weights[b], sc.tmp.data(), sc.acc.data(), m);
                    my_offgrid += detail::count_offgrid(sc.succ.data(), m, dq, d);
                }
                ops.add(sc.cost.data(), sc.acc.data(), sc.tot.data(), m);
                const std::size_t best = ops.argmin(sc.tot.data(), m);
                vt.values[k] = sc.tot[best];
                pt.controls[k] = sc.u[best];
                my_evals += m * dist.support.size();
            }
            evals.fetch_add(my_evals, std::memory_order_relaxed);
            offgrid.fetch_add(my_offgrid, std::memory_order_relaxed);
        });
        result.evaluations_per_stage[static_cast<std::size_t>(i)] = evals.load();
        note_offgrid_queries(offgrid.load());
    }

    const double q1[1] = {res.initial_store};
    result.initial_value = value_at(result.values[0].values, result.grid, q1);
    result.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return result;
}

SolveResult solve_markov(const Scenario& s, const SolveOptions& opts) {
    require_stochastic_shape(s, "markov");
    detail::check_options(opts.control_refine, opts.aggregate_refine);
    const auto* flow = std::get_if<MarkovFlow>(&s.flow);
    if (!flow) throw ApplicabilityError("markov: scenario flow model is not a Markov chain");

    const auto start = Clock::now();
    const Reservoir& res = s.reservoirs[0];
    const int n = s.n_periods;
    const int d = res.level_count;
    const std::size_t bins = flow->bins.size();
    const double dq = res.step();
    const double dc = dq / static_cast<double>(opts.control_refine);
    const double qbar = res.capacity;
    const double p = s.costs.deficit_penalty;
    const auto& ops = kernels::active();
    const std::size_t D = static_cast<std::size_t>(d);

    SolveResult result;
    result.model = Model::markov;
    result.grid = Grid::from_reservoirs(s.reservoirs);
    result.inflow_bins = static_cast<int>(bins);
    result.values.resize(static_cast<std::size_t>(n));
    result.policies.resize(static_cast<std::size_t>(n));
    result.minimizations_per_stage.assign(static_cast<std::size_t>(n), D * bins);
    result.evaluations_per_stage.assign(static_cast<std::size_t>(n), 0);

    for (int i = n - 1; i >= 0; --i) {
        auto& vt = result.values[static_cast<std::size_t>(i)];
        auto& pt = result.policies[static_cast<std::size_t>(i)];
        vt.stage = i + 1;
        pt.stage = i + 1;
        vt.values.resize(D * bins);
        pt.controls.resize(D * bins);
        const bool terminal = (i == n - 1);
        const ValueTable* next =
            terminal ? nullptr : &result.values[static_cast<std::size_t>(i + 1)];
        const auto& matrix = flow->transitions[static_cast<std::size_t>(i)];
        const double r = s.demands[static_cast<std::size_t>(i)];
        const auto costs = kernels::StageCostParams{
            r, s.costs.thermal_price, p, s.costs.thermal_cap,
            detail::sale_coefficient(s.costs, i)};
        std::vector<double> row_bound(bins);
        for (std::size_t b = 0; b < bins; ++b)
            row_bound[b] = fidelity_bound({flow->bins, matrix[b]}, flow->confidence_level);

        std::atomic<std::uint64_t> evals{0};
        std::atomic<std::uint64_t> offgrid{0};
        parallel_for(D * bins, [&](std::size_t begin, std::size_t end) {
            detail::Scratch sc;
            std::uint64_t my_evals = 0;
            std::uint64_t my_offgrid = 0;
            for (std::size_t state = begin; state < end; ++state) {
                const std::size_t prev_bin = state / D;
                const std::size_t k = state % D;
                const double q = result.grid.store(0, static_cast<int>(k));
                const auto& row = matrix[prev_bin];
                detail::fill_candidates(sc.u, std::min(r, q + row_bound[prev_bin]), dc);
                const std::size_t m = sc.u.size();
                sc.cost.resize(m);
                sc.succ.resize(m);
                sc.cont.resize(m);
                sc.pen.resize(m);
                sc.tmp.resize(m);
                sc.tot.resize(m);
                sc.acc.assign(m, 0.0);
                ops.stage_cost(sc.u.data(), sc.cost.data(), m, costs);
                for (std::size_t b = 0; b < bins; ++b) {
                    const double x = flow->bins[b];
                    ops.relu_scaled(sc.u.data(), sc.pen.data(), m, q + x, p);
                    if (terminal) {
                        ops.axpy(row[b], sc.pen.data(), sc.acc.data(), m);
                        continue;
                    }
                    ops.shift_clamp(sc.u.data(), sc.succ.data(), m, q + x, 0.0, qbar);
                    ops.interp1(next->values.data() + b * D, d, dq, sc.succ.data(),
                                sc.cont.data(), m);
                    ops.add(sc.cont.data(), sc.pen.data(), sc.tmp.data(), m);
                    ops.axpy(row[b], sc.tmp.data(), sc.acc.data(), m);
                    my_offgrid += detail::count_offgrid(sc.succ.data(), m, dq, d);
                }
                ops.add(sc.cost.data(), sc.acc.data(), sc.tot.data(), m);
                const std::size_t best = ops.argmin(sc.tot.data(), m);
                vt.values[state] = sc.tot[best];
                pt.controls[state] = sc.u[best];
                my_evals += m * bins;
            }
            evals.fetch_add(my_evals, std::memory_order_relaxed);
            offgrid.fetch_add(my_offgrid, std::memory_order_relaxed);
        });
        result.evaluations_per_stage[static_cast<std::size_t>(i)] = evals.load();
        note_offgrid_queries(offgrid.load());
    }

    // Reported value: stage-1 table at the initial store, averaged over the
    // pre-horizon bin distribution.
    const double q1[1] = {res.initial_store};
    double avg = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const std::span<const double> slice(result.values[0].values.data() + b * D, D);
        avg += flow->initial[b] * value_at(slice, result.grid, q1);
    }
    result.initial_value = avg;
    result.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return result;
}

} // namespace hydrodp
