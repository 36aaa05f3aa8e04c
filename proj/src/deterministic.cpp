// Backward induction for the deterministic models: single reservoir,
// single reservoir with a run-of-river cascade, and the exact
// multi-reservoir chain with hard or penalized demand coupling.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>

#include "hydrodp/errors.hpp"
#include "hydrodp/kernels.hpp"
#include "hydrodp/parallel.hpp"
#include "hydrodp/solve.hpp"
#include "solve_detail.hpp"

namespace hydrodp {

using detail::fill_candidates;
using detail::Scratch;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

kernels::StageCostParams cost_params(const Scenario& s, int period, double surplus_price) {
    return kernels::StageCostParams{
        s.demands[static_cast<std::size_t>(period)],
        s.costs.thermal_price,
        s.costs.deficit_penalty,
        s.costs.thermal_cap,
        surplus_price,
    };
}

} // namespace

namespace detail {
void check_options(int control_refine, int aggregate_refine) {
    if (control_refine < 1)
        throw ApplicabilityError("control_refine must be >= 1");
    if (aggregate_refine < 1)
        throw ApplicabilityError("aggregate_refine must be >= 1");
}
} // namespace detail

namespace {

void require_shape(const Scenario& s, bool want_stations, const char* model) {
    require_valid(s);
    if (s.reservoirs.size() != 1)
        throw ApplicabilityError(std::string(model) + ": requires exactly one reservoir");
    if (want_stations && s.cascade_stations.empty())
        throw ApplicabilityError(std::string(model) + ": requires at least one cascade station");
    if (!want_stations && !s.cascade_stations.empty())
        throw ApplicabilityError(std::string(model) + ": does not accept cascade stations");
    if (!s.deterministic())
        throw ApplicabilityError(std::string(model) + ": requires deterministic inflows");
}

} // namespace

double stage_cost(const StageCostInputs& in) {
    const auto p = kernels::StageCostParams{
        in.demand, in.costs.thermal_price, in.costs.deficit_penalty,
        in.costs.thermal_cap, -in.costs.sale_price_at(in.period)};
    double out = 0.0;
    kernels::active().stage_cost(&in.hydro_total, &out, 1, p);
    return out;
}

TerminalDecision terminal_stage(const Scenario& s, double store) {
    const int last = s.n_periods - 1;
    const double inflow = s.det_flow().inflows[0][static_cast<std::size_t>(last)];
    const double release =
        std::min(s.demands[static_cast<std::size_t>(last)], store + inflow);
    const double cost = stage_cost(
        {s.demands[static_cast<std::size_t>(last)], release, s.costs, last});
    return {cost, release};
}

SolveResult solve_single(const Scenario& s, const SolveOptions& opts) {
    require_shape(s, false, "single");
    detail::check_options(opts.control_refine, opts.aggregate_refine);
    const auto start = Clock::now();

    const Reservoir& res = s.reservoirs[0];
    const int n = s.n_periods;
    const int d = res.level_count;
    const double dq = res.step();
    const double dc = dq / static_cast<double>(opts.control_refine);
    const double qbar = res.capacity;
    const auto& inflow = s.det_flow().inflows[0];
    const auto& ops = kernels::active();

    SolveResult result;
    result.model = Model::single;
    result.grid = Grid::from_reservoirs(s.reservoirs);
    result.values.resize(static_cast<std::size_t>(n));
    result.policies.resize(static_cast<std::size_t>(n));
    result.minimizations_per_stage.assign(static_cast<std::size_t>(n),
                                          static_cast<std::size_t>(d));
    result.evaluations_per_stage.assign(static_cast<std::size_t>(n), 0);

    // Terminal stage from the closed-form policy.
    {
        auto& vt = result.values.back();
        auto& pt = result.policies.back();
        vt.stage = n;
        pt.stage = n;
        vt.values.resize(static_cast<std::size_t>(d));
        pt.controls.resize(static_cast<std::size_t>(d));
        bool capacity_would_bind = false;
        for (int k = 0; k < d; ++k) {
            const double q = result.grid.store(0, k);
            const TerminalDecision t = terminal_stage(s, q);
            vt.values[static_cast<std::size_t>(k)] = t.cost;
            pt.controls[static_cast<std::size_t>(k)] = t.release;
            if (t.release > qbar) capacity_would_bind = true;
        }
        result.evaluations_per_stage.back() = static_cast<std::size_t>(d);
        if (capacity_would_bind)
            result.notes.push_back(
                "terminal release min(demand, store + inflow) exceeds the reservoir "
                "capacity in some states; a capacity-capped terminal rule would differ here");
    }

    for (int i = n - 2; i >= 0; --i) {
        auto& vt = result.values[static_cast<std::size_t>(i)];
        auto& pt = result.policies[static_cast<std::size_t>(i)];
        vt.stage = i + 1;
        pt.stage = i + 1;
        vt.values.resize(static_cast<std::size_t>(d));
        pt.controls.resize(static_cast<std::size_t>(d));
        const double* fnext = result.values[static_cast<std::size_t>(i + 1)].values.data();
        const double x = inflow[static_cast<std::size_t>(i)];
        const double r = s.demands[static_cast<std::size_t>(i)];
        const auto costs = cost_params(s, i, detail::sale_coefficient(s.costs, i));

        std::atomic<std::uint64_t> evals{0};
        std::atomic<std::uint64_t> offgrid{0};
        parallel_for(static_cast<std::size_t>(d), [&](std::size_t begin, std::size_t end) {
            Scratch sc;
            sc.reserve(static_cast<std::size_t>(d * opts.control_refine + 2));
            std::uint64_t my_evals = 0;
            std::uint64_t my_offgrid = 0;
            for (std::size_t k = begin; k < end; ++k) {
                const double q = result.grid.store(0, static_cast<int>(k));
                fill_candidates(sc.u, std::min(r, q + x), dc);
                const std::size_t m = sc.u.size();
                sc.cost.resize(m);
                sc.succ.resize(m);
                sc.cont.resize(m);
                sc.tot.resize(m);
                ops.stage_cost(sc.u.data(), sc.cost.data(), m, costs);
                ops.shift_clamp(sc.u.data(), sc.succ.data(), m, q + x, 0.0, qbar);
                ops.interp1(fnext, d, dq, sc.succ.data(), sc.cont.data(), m);
                ops.add(sc.cost.data(), sc.cont.data(), sc.tot.data(), m);
                const std::size_t best = ops.argmin(sc.tot.data(), m);
                vt.values[k] = sc.tot[best];
                pt.controls[k] = sc.u[best];
                my_evals += m;
                my_offgrid += detail::count_offgrid(sc.succ.data(), m, dq, d);
            }
            evals.fetch_add(my_evals, std::memory_order_relaxed);
            offgrid.fetch_add(my_offgrid, std::memory_order_relaxed);
        });
        result.evaluations_per_stage[static_cast<std::size_t>(i)] = evals.load();
        note_offgrid_queries(offgrid.load());
    }

    const double q1[1] = {res.initial_store};
    result.initial_value = value_at(result.values[0].values, result.grid, q1);
    result.wall_ms = elapsed_ms(start);
    return result;
}

SolveResult solve_cascade(const Scenario& s, const SolveOptions& opts) {
    require_shape(s, true, "cascade");
    detail::check_options(opts.control_refine, opts.aggregate_refine);
    const auto start = Clock::now();

    const Reservoir& res = s.reservoirs[0];
    const int n = s.n_periods;
    const int d = res.level_count;
    const double dq = res.step();
    const double dc = dq / static_cast<double>(opts.control_refine);
    const double qbar = res.capacity;
    const auto& inflow = s.det_flow().inflows[0];
    const auto& stations = s.cascade_stations;
    const auto& ops = kernels::active();

    SolveResult result;
    result.model = Model::cascade;
    result.grid = Grid::from_reservoirs(s.reservoirs);
    result.values.resize(static_cast<std::size_t>(n));
    result.policies.resize(static_cast<std::size_t>(n));
    result.minimizations_per_stage.assign(static_cast<std::size_t>(n),
                                          static_cast<std::size_t>(d));
    result.evaluations_per_stage.assign(static_cast<std::size_t>(n), 0);

    // Station energy for release u in period i: stations pass
    // min(I_j, u + cumulative lateral inflow), summed over the cascade.
    auto hydro_of = [&stations](int period, double u) {
        double cum = u;
        double total = 0.0;
        for (const CascadeStation& st : stations) {
            cum += st.lateral_inflows[static_cast<std::size_t>(period)];
            total += std::min(st.pass_capacity, cum);
        }
        return total;
    };

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
        const double x = inflow[static_cast<std::size_t>(i)];
        const double r = s.demands[static_cast<std::size_t>(i)];
        const auto costs = cost_params(s, i, detail::sale_coefficient(s.costs, i));

        std::atomic<std::uint64_t> evals{0};
        std::atomic<std::uint64_t> offgrid{0};
        parallel_for(static_cast<std::size_t>(d), [&](std::size_t begin, std::size_t end) {
            Scratch sc;
            std::vector<double> hydro;
            std::uint64_t my_evals = 0;
            std::uint64_t my_offgrid = 0;
            for (std::size_t k = begin; k < end; ++k) {
                const double q = result.grid.store(0, static_cast<int>(k));
                fill_candidates(sc.u, q + x, dc);
                // Total station energy rises with u, so the demand bound
                // keeps a prefix of the ascending candidate list.
                std::size_t m = 0;
                hydro.clear();
                while (m < sc.u.size()) {
                    const double h = hydro_of(i, sc.u[m]);
                    if (h > r) break;
                    hydro.push_back(h);
                    ++m;
                }
                if (m == 0)
                    throw ApplicabilityError(
                        "cascade: lateral inflows alone exceed demand; no feasible release");
                sc.cost.resize(m);
                sc.tot.resize(m);
                ops.stage_cost(hydro.data(), sc.cost.data(), m, costs);
                if (terminal) {
                    sc.tot.assign(sc.cost.begin(), sc.cost.end());
                } else {
                    sc.succ.resize(m);
                    sc.cont.resize(m);
                    ops.shift_clamp(sc.u.data(), sc.succ.data(), m, q + x, 0.0, qbar);
                    ops.interp1(fnext, d, dq, sc.succ.data(), sc.cont.data(), m);
                    ops.add(sc.cost.data(), sc.cont.data(), sc.tot.data(), m);
                    my_offgrid += detail::count_offgrid(sc.succ.data(), m, dq, d);
                }
                const std::size_t best = ops.argmin(sc.tot.data(), m);
                vt.values[k] = sc.tot[best];
                pt.controls[k] = sc.u[best];
                my_evals += m;
            }
            evals.fetch_add(my_evals, std::memory_order_relaxed);
            offgrid.fetch_add(my_offgrid, std::memory_order_relaxed);
        });
        result.evaluations_per_stage[static_cast<std::size_t>(i)] = evals.load();
        note_offgrid_queries(offgrid.load());
    }

    const double q1[1] = {res.initial_store};
    result.initial_value = value_at(result.values[0].values, result.grid, q1);
    result.wall_ms = elapsed_ms(start);
    return result;
}

SolveResult solve_multi(const Scenario& s, bool penalty_mode, const SolveOptions& opts) {
    require_valid(s);
    detail::check_options(opts.control_refine, opts.aggregate_refine);
    if (!s.cascade_stations.empty())
        throw ApplicabilityError("multi: does not accept cascade stations");
    if (!s.deterministic())
        throw ApplicabilityError("multi: requires deterministic inflows");
    const int L = static_cast<int>(s.reservoirs.size());
    if (L > 8)
        throw ApplicabilityError("multi: at most 8 reservoirs are supported");
    if (L > 3 && !opts.allow_high_dimension)
        throw ApplicabilityError(
            "multi: " + std::to_string(L) +
            " reservoirs make the exact product-grid sweep intractable "
            "(dimensionality); rerun with the high-dimension override or use the "
            "aggregate model");
    if (penalty_mode && !s.costs.sales_enabled() && !s.costs.demand_penalty)
        throw ApplicabilityError(
            "multi-penalty: needs costs.demand_penalty (or sale prices) for the "
            "relaxed coupling term");

    const auto start = Clock::now();
    const int n = s.n_periods;
    const Grid grid = Grid::from_reservoirs(s.reservoirs);
    const std::size_t D = grid.size();
    const auto& flows = s.det_flow().inflows;
    const auto& ops = kernels::active();

    SolveResult result;
    result.model = penalty_mode ? Model::multi_penalty : Model::multi;
    result.grid = grid;
    result.values.resize(static_cast<std::size_t>(n));
    result.policies.resize(static_cast<std::size_t>(n));
    result.minimizations_per_stage.assign(static_cast<std::size_t>(n), D);
    result.evaluations_per_stage.assign(static_cast<std::size_t>(n), 0);

    std::vector<double> caps(static_cast<std::size_t>(L));
    std::vector<double> dcs(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) {
        caps[static_cast<std::size_t>(j)] = s.reservoirs[static_cast<std::size_t>(j)].capacity;
        dcs[static_cast<std::size_t>(j)] =
            grid.steps[static_cast<std::size_t>(j)] / static_cast<double>(opts.control_refine);
    }

    for (int i = n - 1; i >= 0; --i) {
        auto& vt = result.values[static_cast<std::size_t>(i)];
        auto& pt = result.policies[static_cast<std::size_t>(i)];
        vt.stage = i + 1;
        pt.stage = i + 1;
        pt.controls_per_state = L;
        vt.values.resize(D);
        pt.controls.resize(D * static_cast<std::size_t>(L));
        const bool terminal = (i == n - 1);
        const double r = s.demands[static_cast<std::size_t>(i)];
        const double surplus_price = penalty_mode && !s.costs.sales_enabled()
                                         ? *s.costs.demand_penalty
                                         : detail::sale_coefficient(s.costs, i);
        const auto costs = cost_params(s, i, surplus_price);

        std::atomic<std::uint64_t> evals{0};
        parallel_for(D, [&](std::size_t begin, std::size_t end) {
            Scratch sc;
            std::vector<std::vector<double>> cand(static_cast<std::size_t>(L));
            std::vector<double> stores(static_cast<std::size_t>(L));
            std::vector<double> succ_prefix(static_cast<std::size_t>(L));
            std::vector<double> u_prefix(static_cast<std::size_t>(L));
            std::vector<double> best_u(static_cast<std::size_t>(L));
            std::vector<int> idx(static_cast<std::size_t>(L));
            const int last_axis = L - 1;
            const int d_last = grid.levels[static_cast<std::size_t>(last_axis)];
            sc.slice.resize(static_cast<std::size_t>(d_last));
            std::uint64_t my_evals = 0;

            for (std::size_t state = begin; state < end; ++state) {
                grid.unflatten(state, idx);
                for (int j = 0; j < L; ++j)
                    stores[static_cast<std::size_t>(j)] =
                        grid.store(j, idx[static_cast<std::size_t>(j)]);

                double best_value = 0.0;
                bool have_best = false;

                // Enumerate (u_1, ..., u_L) in ascending lexicographic order;
                // strict improvement keeps the smallest minimizer.
                auto sweep = [&](auto&& self, int axis, double upstream, double partial) -> void {
                    const auto ja = static_cast<std::size_t>(axis);
                    const double xi = flows[ja][static_cast<std::size_t>(i)];
                    const double bound = stores[ja] + xi + upstream;
                    if (axis < last_axis) {
                        fill_candidates(cand[ja], bound, dcs[ja]);
                        for (const double u : cand[ja]) {
                            const double sum = partial + u;
                            if (!penalty_mode && sum > r) break;
                            u_prefix[ja] = u;
                            succ_prefix[ja] = std::min(
                                caps[ja], std::max(0.0, (stores[ja] + upstream + xi) - u));
                            self(self, axis + 1, u, sum);
                        }
                        return;
                    }

                    fill_candidates(sc.u, bound, dcs[ja]);
                    std::size_t m = sc.u.size();
                    sc.cost.resize(m);
                    sc.tot.resize(m);
                    // Hydro totals for the batch; the hard coupling keeps an
                    // ascending prefix.
                    sc.tmp.resize(m);
                    for (std::size_t c = 0; c < m; ++c) sc.tmp[c] = partial + sc.u[c];
                    if (!penalty_mode) {
                        std::size_t keep = 0;
                        while (keep < m && sc.tmp[keep] <= r) ++keep;
                        if (keep == 0) return; // u = 0 kept unless the prefix already breaks
                        m = keep;
                    }
                    ops.stage_cost(sc.tmp.data(), sc.cost.data(), m, costs);
                    if (terminal) {
                        sc.tot.assign(sc.cost.begin(), sc.cost.begin() + static_cast<long>(m));
                    } else {
                        sc.succ.resize(m);
                        sc.cont.resize(m);
                        const double base = stores[ja] + upstream + xi;
                        ops.shift_clamp(sc.u.data(), sc.succ.data(), m, base, 0.0, caps[ja]);
                        succ_prefix[ja] = 0.0; // placeholder for the collapse call
                        collapse_to_axis(result.values[static_cast<std::size_t>(i + 1)].values,
                                         grid, succ_prefix, last_axis, sc.slice.data());
                        ops.interp1(sc.slice.data(), d_last,
                                    grid.steps[static_cast<std::size_t>(last_axis)],
                                    sc.succ.data(), sc.cont.data(), m);
                        ops.add(sc.cost.data(), sc.cont.data(), sc.tot.data(), m);
                    }
                    const std::size_t b = ops.argmin(sc.tot.data(), m);
                    my_evals += m;
                    if (!have_best || sc.tot[b] < best_value) {
                        have_best = true;
                        best_value = sc.tot[b];
                        for (int j = 0; j < last_axis; ++j)
                            best_u[static_cast<std::size_t>(j)] =
                                u_prefix[static_cast<std::size_t>(j)];
                        best_u[static_cast<std::size_t>(last_axis)] = sc.u[b];
                    }
                };
                sweep(sweep, 0, 0.0, 0.0);

                vt.values[state] = best_value;
                for (int j = 0; j < L; ++j)
                    pt.controls[state * static_cast<std::size_t>(L) + static_cast<std::size_t>(j)] =
                        best_u[static_cast<std::size_t>(j)];
            }
            evals.fetch_add(my_evals, std::memory_order_relaxed);
        });
        result.evaluations_per_stage[static_cast<std::size_t>(i)] = evals.load();
    }

    std::vector<double> q1(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j)
        q1[static_cast<std::size_t>(j)] = s.reservoirs[static_cast<std::size_t>(j)].initial_store;
    result.initial_value = value_at(result.values[0].values, grid, q1);
    result.wall_ms = elapsed_ms(start);
    return result;
}

const char* model_name(Model m) {
    switch (m) {
        case Model::single: return "single";
        case Model::cascade: return "cascade";
        case Model::multi: return "multi";
        case Model::multi_penalty: return "multi-penalty";
        case Model::aggregate: return "aggregate";
        case Model::independent: return "independent";
        case Model::markov: return "markov";
    }
    return "?";
}

Model model_from_name(const std::string& name) {
    for (Model m : {Model::single, Model::cascade, Model::multi, Model::multi_penalty,
                    Model::aggregate, Model::independent, Model::markov})
        if (name == model_name(m)) return m;
    throw ApplicabilityError("unknown model '" + name + "'");
}

SolveResult solve(const Scenario& s, Model model, const SolveOptions& opts) {
    switch (model) {
        case Model::single: return solve_single(s, opts);
        case Model::cascade: return solve_cascade(s, opts);
        case Model::multi: return solve_multi(s, false, opts);
        case Model::multi_penalty: return solve_multi(s, true, opts);
        case Model::aggregate: return solve_aggregate(s, opts);
        case Model::independent: return solve_independent(s, opts);
        case Model::markov: return solve_markov(s, opts);
    }
    throw ApplicabilityError("unknown model");
}

} // namespace hydrodp
