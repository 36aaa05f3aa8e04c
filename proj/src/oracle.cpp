// Brute-force reference answers and the forward policy simulator. Everything
// in the anonymous namespace below restates model arithmetic from scratch
// instead of reusing the solver internals; the equivalence tests lean on
// that independence.

#include "hydrodp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "hydrodp/errors.hpp"
#include "hydrodp/grid.hpp"

namespace hydrodp {
namespace {

double cost_of(double demand, double hydro, double c, double p, double K, double surplus_price) {
    const double gap = demand - hydro;
    const double thermal = std::clamp(gap, 0.0, K);
    const double deficit = std::max(gap - K, 0.0);
    const double surplus = std::max(-gap, 0.0);
    return thermal * c + deficit * p + surplus * surplus_price;
}

// Candidate rule shared by every scalar-control model: lattice points below
// the cap, then the cap itself.
std::vector<double> lattice(double cap, double dc) {
    std::vector<double> out;
    if (!(cap > 0.0)) {
        out.push_back(0.0);
        return out;
    }
    for (std::size_t j = 0;; ++j) {
        const double u = static_cast<double>(j) * dc;
        if (!(u < cap)) break;
        out.push_back(u);
    }
    out.push_back(cap);
    return out;
}

// Aggregate-mode sweep: proportional lattice over [0, M] plus the stage-cost
// kinks, plus node drawdowns when there is a single reservoir.
std::vector<double> aggregate_lattice(double potential, double sweep_div, double r, double K,
                                      const Grid& grid, bool single_reservoir) {
    std::vector<double> out = lattice(potential, potential / sweep_div);
    const auto push = [&](double v) {
        if (v > 0.0 && v < potential) out.push_back(v);
    };
    push(r);
    push(r - K);
    if (single_reservoir)
        for (int k = 0; k < grid.levels[0]; ++k) push(potential - grid.store(0, k));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double quantile(const std::vector<double>& support, const std::vector<double>& weights,
                double level) {
    double cum = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
        cum += weights[k];
        if (cum >= level) return support[k];
    }
    return support.back();
}

void check_budget(double size, double budget) {
    if (size > budget)
        throw BudgetError("enumeration size " + std::to_string(size) + " exceeds budget " +
                              std::to_string(budget),
                          size);
}

struct BestSequence {
    double cost = 0.0;
    bool set = false;
    std::vector<std::vector<double>> releases;
};

// ---- deterministic single reservoir -------------------------------------

void single_rec(const Scenario& s, const OracleOptions& opts, int i, double store, double acc,
                std::vector<std::vector<double>>& cur, BestSequence& best) {
    if (i == s.n_periods) {
        if (!best.set || acc < best.cost) {
            best.set = true;
            best.cost = acc;
            best.releases = cur;
        }
        return;
    }
    const auto ia = static_cast<std::size_t>(i);
    const Reservoir& res = s.reservoirs[0];
    const double dc = res.step() / static_cast<double>(opts.control_refine);
    const double x = s.det_flow().inflows[0][ia];
    const double r = s.demands[ia];
    for (double u : lattice(std::min(r, store + x), dc)) {
        const double cost = cost_of(r, u, s.costs.thermal_price, s.costs.deficit_penalty,
                                    s.costs.thermal_cap, -s.costs.sale_price_at(i));
        const double next = std::min(res.capacity, std::max(0.0, (store + x) - u));
        cur.push_back({u});
        single_rec(s, opts, i + 1, next, acc + cost, cur, best);
        cur.pop_back();
    }
}

// ---- deterministic cascade ------------------------------------------------

double cascade_hydro(const Scenario& s, int period, double u) {
    double cum = u;
    double total = 0.0;
    for (const CascadeStation& st : s.cascade_stations) {
        cum += st.lateral_inflows[static_cast<std::size_t>(period)];
        total += std::min(st.pass_capacity, cum);
    }
    return total;
}

void cascade_rec(const Scenario& s, const OracleOptions& opts, int i, double store, double acc,
                 std::vector<std::vector<double>>& cur, BestSequence& best) {
    if (i == s.n_periods) {
        if (!best.set || acc < best.cost) {
            best.set = true;
            best.cost = acc;
            best.releases = cur;
        }
        return;
    }
    const auto ia = static_cast<std::size_t>(i);
    const Reservoir& res = s.reservoirs[0];
    const double dc = res.step() / static_cast<double>(opts.control_refine);
    const double x = s.det_flow().inflows[0][ia];
    const double r = s.demands[ia];
    for (double u : lattice(store + x, dc)) {
        const double hydro = cascade_hydro(s, i, u);
        if (hydro > r) break; // rises with u
        const double cost = cost_of(r, hydro, s.costs.thermal_price, s.costs.deficit_penalty,
                                    s.costs.thermal_cap, -s.costs.sale_price_at(i));
        const double next = std::min(res.capacity, std::max(0.0, (store + x) - u));
        cur.push_back({u});
        cascade_rec(s, opts, i + 1, next, acc + cost, cur, best);
        cur.pop_back();
    }
}

// ---- deterministic reservoir chain ----------------------------------------

void multi_axis_rec(const Scenario& s, const OracleOptions& opts, bool penalty, int i, int axis,
                    const std::vector<double>& stores, std::vector<double>& next_stores,
                    std::vector<double>& us, double partial, double acc,
                    std::vector<std::vector<double>>& cur, BestSequence& best);

void multi_rec(const Scenario& s, const OracleOptions& opts, bool penalty, int i,
               const std::vector<double>& stores, double acc,
               std::vector<std::vector<double>>& cur, BestSequence& best) {
    if (i == s.n_periods) {
        if (!best.set || acc < best.cost) {
            best.set = true;
            best.cost = acc;
            best.releases = cur;
        }
        return;
    }
    const int L = static_cast<int>(s.reservoirs.size());
    std::vector<double> next_stores(static_cast<std::size_t>(L));
    std::vector<double> us(static_cast<std::size_t>(L));
    multi_axis_rec(s, opts, penalty, i, 0, stores, next_stores, us, 0.0, acc, cur, best);
}

void multi_axis_rec(const Scenario& s, const OracleOptions& opts, bool penalty, int i, int axis,
                    const std::vector<double>& stores, std::vector<double>& next_stores,
                    std::vector<double>& us, double partial, double acc,
                    std::vector<std::vector<double>>& cur, BestSequence& best) {
    const int L = static_cast<int>(s.reservoirs.size());
    const auto ia = static_cast<std::size_t>(i);
    if (axis == L) {
        const double r = s.demands[ia];
        const double surplus_price = penalty && !s.costs.sales_enabled()
                                         ? *s.costs.demand_penalty
                                         : -s.costs.sale_price_at(i);
        const double cost = cost_of(r, partial, s.costs.thermal_price, s.costs.deficit_penalty,
                                    s.costs.thermal_cap, surplus_price);
        cur.push_back(us);
        multi_rec(s, opts, penalty, i + 1, next_stores, acc + cost, cur, best);
        cur.pop_back();
        return;
    }
    const auto ja = static_cast<std::size_t>(axis);
    const Reservoir& res = s.reservoirs[ja];
    const double dc = res.step() / static_cast<double>(opts.control_refine);
    const double xi = s.det_flow().inflows[ja][ia];
    const double upstream = axis == 0 ? 0.0 : us[ja - 1];
    const double r = s.demands[ia];
    for (double u : lattice(stores[ja] + xi + upstream, dc)) {
        const double sum = partial + u;
        if (!penalty && sum > r) break;
        us[ja] = u;
        next_stores[ja] = std::min(res.capacity, std::max(0.0, (stores[ja] + upstream + xi) - u));
        multi_axis_rec(s, opts, penalty, i, axis + 1, stores, next_stores, us, sum, acc, cur,
                       best);
    }
}

// ---- aggregate heuristic ----------------------------------------------------

void aggregate_rec(const Scenario& s, const OracleOptions& opts, const Grid& grid, int i,
                   const std::vector<double>& stores, double acc,
                   std::vector<std::vector<double>>& cur, BestSequence& best) {
    if (i == s.n_periods) {
        if (!best.set || acc < best.cost) {
            best.set = true;
            best.cost = acc;
            best.releases = cur;
        }
        return;
    }
    const auto ia = static_cast<std::size_t>(i);
    const std::size_t m = s.reservoirs.size();
    int max_levels = 2;
    for (const Reservoir& res : s.reservoirs) max_levels = std::max(max_levels, res.level_count);
    const double sweep_div = static_cast<double>(opts.aggregate_refine) *
                             static_cast<double>(max_levels - 1);
    double potential = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        potential += stores[j] + s.det_flow().inflows[j][ia];
    const double r = s.demands[ia];
    std::vector<double> next(m);
    for (double u : aggregate_lattice(potential, sweep_div, r, s.costs.thermal_cap, grid,
                                      m == 1)) {
        const double cost = cost_of(r, u, s.costs.thermal_price, s.costs.deficit_penalty,
                                    s.costs.thermal_cap, -s.costs.sale_price_at(i));
        const double share = potential > 0.0 ? u / potential : 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double flow_in = s.det_flow().inflows[j][ia];
            next[j] = std::min(s.reservoirs[j].capacity, (1.0 - share) * (stores[j] + flow_in));
        }
        cur.push_back({u});
        aggregate_rec(s, opts, grid, i + 1, next, acc + cost, cur, best);
        cur.pop_back();
    }
}

// ---- budget estimation -------------------------------------------------------

double count_lattice(double cap, double dc) {
    if (!(cap > 0.0)) return 1.0;
    return std::floor(cap / dc) + 2.0;
}

double deterministic_budget_size(const Scenario& s, Model model, const OracleOptions& opts) {
    double total = 1.0;
    const auto& flows = s.det_flow().inflows;
    int max_levels = 2;
    for (const Reservoir& res : s.reservoirs) max_levels = std::max(max_levels, res.level_count);
    for (int i = 0; i < s.n_periods; ++i) {
        const auto ia = static_cast<std::size_t>(i);
        double per_period = 1.0;
        switch (model) {
            case Model::single: {
                const Reservoir& res = s.reservoirs[0];
                const double dc = res.step() / static_cast<double>(opts.control_refine);
                per_period = count_lattice(std::min(s.demands[ia], res.capacity + flows[0][ia]), dc);
                break;
            }
            case Model::cascade: {
                const Reservoir& res = s.reservoirs[0];
                const double dc = res.step() / static_cast<double>(opts.control_refine);
                per_period = count_lattice(res.capacity + flows[0][ia], dc);
                break;
            }
            case Model::multi:
            case Model::multi_penalty: {
                double upstream_max = 0.0;
                for (std::size_t j = 0; j < s.reservoirs.size(); ++j) {
                    const Reservoir& res = s.reservoirs[j];
                    const double dc = res.step() / static_cast<double>(opts.control_refine);
                    const double bound = res.capacity + flows[j][ia] + upstream_max;
                    per_period *= count_lattice(bound, dc);
                    upstream_max = bound;
                }
                break;
            }
            case Model::aggregate: {
                const double sweep = static_cast<double>(opts.aggregate_refine) *
                                     static_cast<double>(max_levels - 1);
                per_period = sweep + 3.0 +
                             (s.reservoirs.size() == 1
                                  ? static_cast<double>(s.reservoirs[0].level_count)
                                  : 0.0);
                break;
            }
            default:
                throw ApplicabilityError("brute_force_optimum: deterministic models only");
        }
        total *= per_period;
        if (total > 1e18) return total;
    }
    return total;
}

// ---- stochastic scenario tree ----------------------------------------------

double indep_rec(const Scenario& s, const OracleOptions& opts, int i, double store) {
    if (i == s.n_periods) return 0.0;
    const auto ia = static_cast<std::size_t>(i);
    const Reservoir& res = s.reservoirs[0];
    const auto& flow = s.indep_flow();
    const InflowDistribution& dist = flow.per_period[ia];
    const double delta = quantile(dist.support, dist.weights, flow.confidence_level);
    const double dc = res.step() / static_cast<double>(opts.control_refine);
    const double r = s.demands[ia];
    const double p = s.costs.deficit_penalty;

    double best = 0.0;
    bool set = false;
    for (double u : lattice(std::min(r, store + delta), dc)) {
        const double base = cost_of(r, u, s.costs.thermal_price, p, s.costs.thermal_cap,
                                    -s.costs.sale_price_at(i));
        double acc = 0.0;
        for (std::size_t b = 0; b < dist.support.size(); ++b) {
            const double x = dist.support[b];
            const double pen = p * std::max(0.0, u - (store + x));
            const double next = std::min(res.capacity, std::max(0.0, (store + x) - u));
            acc = acc + dist.weights[b] * (indep_rec(s, opts, i + 1, next) + pen);
        }
        const double total = base + acc;
        if (!set || total < best) {
            set = true;
            best = total;
        }
    }
    return best;
}

double markov_rec(const Scenario& s, const OracleOptions& opts, int i, double store,
                  std::size_t prev_bin) {
    if (i == s.n_periods) return 0.0;
    const auto ia = static_cast<std::size_t>(i);
    const Reservoir& res = s.reservoirs[0];
    const auto& flow = s.markov_flow();
    const auto& row = flow.transitions[ia][prev_bin];
    const double delta = quantile(flow.bins, row, flow.confidence_level);
    const double dc = res.step() / static_cast<double>(opts.control_refine);
    const double r = s.demands[ia];
    const double p = s.costs.deficit_penalty;

    double best = 0.0;
    bool set = false;
    for (double u : lattice(std::min(r, store + delta), dc)) {
        const double base = cost_of(r, u, s.costs.thermal_price, p, s.costs.thermal_cap,
                                    -s.costs.sale_price_at(i));
        double acc = 0.0;
        for (std::size_t b = 0; b < flow.bins.size(); ++b) {
            const double x = flow.bins[b];
            const double pen = p * std::max(0.0, u - (store + x));
            const double next = std::min(res.capacity, std::max(0.0, (store + x) - u));
            acc = acc + row[b] * (markov_rec(s, opts, i + 1, next, b) + pen);
        }
        const double total = base + acc;
        if (!set || total < best) {
            set = true;
            best = total;
        }
    }
    return best;
}

} // namespace

OracleResult brute_force_optimum(const Scenario& s, Model model, const OracleOptions& opts) {
    require_valid(s);
    if (!s.deterministic())
        throw ApplicabilityError("brute_force_optimum: requires deterministic inflows");
    check_budget(deterministic_budget_size(s, model, opts), opts.budget);

    BestSequence best;
    std::vector<std::vector<double>> cur;
    switch (model) {
        case Model::single:
            if (s.reservoirs.size() != 1 || !s.cascade_stations.empty())
                throw ApplicabilityError("brute_force_optimum: single needs 1 reservoir, 0 stations");
            single_rec(s, opts, 0, s.reservoirs[0].initial_store, 0.0, cur, best);
            break;
        case Model::cascade:
            if (s.reservoirs.size() != 1 || s.cascade_stations.empty())
                throw ApplicabilityError("brute_force_optimum: cascade needs 1 reservoir, stations");
            cascade_rec(s, opts, 0, s.reservoirs[0].initial_store, 0.0, cur, best);
            break;
        case Model::multi:
        case Model::multi_penalty: {
            std::vector<double> q1;
            for (const Reservoir& res : s.reservoirs) q1.push_back(res.initial_store);
            multi_rec(s, opts, model == Model::multi_penalty, 0, q1, 0.0, cur, best);
            break;
        }
        case Model::aggregate: {
            std::vector<double> q1;
            for (const Reservoir& res : s.reservoirs) q1.push_back(res.initial_store);
            const Grid grid = Grid::from_reservoirs(s.reservoirs);
            aggregate_rec(s, opts, grid, 0, q1, 0.0, cur, best);
            break;
        }
        default:
            throw ApplicabilityError("brute_force_optimum: deterministic models only");
    }
    if (!best.set) throw ApplicabilityError("brute_force_optimum: no feasible control sequence");
    return {best.cost, best.releases};
}

double brute_force_stochastic(const Scenario& s, const OracleOptions& opts) {
    require_valid(s);
    if (s.reservoirs.size() != 1 || !s.cascade_stations.empty())
        throw ApplicabilityError("brute_force_stochastic: needs 1 reservoir, 0 stations");

    const Reservoir& res = s.reservoirs[0];
    const double dc = res.step() / static_cast<double>(opts.control_refine);
    if (const auto* flow = std::get_if<IndependentFlow>(&s.flow)) {
        double size = 1.0;
        for (int i = 0; i < s.n_periods; ++i) {
            const auto& dist = flow->per_period[static_cast<std::size_t>(i)];
            const double delta = quantile(dist.support, dist.weights, flow->confidence_level);
            const double cands = count_lattice(
                std::min(s.demands[static_cast<std::size_t>(i)], res.capacity + delta), dc);
            size *= cands * static_cast<double>(dist.support.size());
        }
        check_budget(size, opts.budget);
        return indep_rec(s, opts, 0, res.initial_store);
    }
    if (const auto* flow = std::get_if<MarkovFlow>(&s.flow)) {
        double size = 1.0;
        for (int i = 0; i < s.n_periods; ++i) {
            double worst = 0.0;
            for (const auto& row : flow->transitions[static_cast<std::size_t>(i)]) {
                const double delta = quantile(flow->bins, row, flow->confidence_level);
                worst = std::max(
                    worst, count_lattice(std::min(s.demands[static_cast<std::size_t>(i)],
                                                  res.capacity + delta),
                                         dc));
            }
            size *= worst * static_cast<double>(flow->bins.size());
        }
        check_budget(size, opts.budget);
        double value = 0.0;
        for (std::size_t b = 0; b < flow->bins.size(); ++b)
            value += flow->initial[b] * markov_rec(s, opts, 0, res.initial_store, b);
        return value;
    }
    throw ApplicabilityError("brute_force_stochastic: requires a stochastic flow model");
}

// ---- forward rollout ---------------------------------------------------------

RolloutTrace rollout(const Scenario& s, const SolveResult& solved,
                     const std::vector<std::vector<double>>& inflows) {
    require_valid(s);
    const int n = s.n_periods;
    if (static_cast<int>(solved.policies.size()) != n)
        throw std::domain_error("rollout: policy stage count does not match the scenario");
    const std::size_t m = s.reservoirs.size();
    if (inflows.size() != m && !(solved.model == Model::markov && inflows.size() == 1))
        throw std::domain_error("rollout: one inflow series per reservoir required");
    for (std::size_t j = 0; j < inflows.size(); ++j) {
        const std::size_t want = (solved.model == Model::markov && j == 0)
                                     ? static_cast<std::size_t>(n + 1)
                                     : static_cast<std::size_t>(n);
        if (inflows[j].size() != want)
            throw std::domain_error("rollout: inflow series length mismatch");
    }

    const Grid& grid = solved.grid;
    const std::size_t D = grid.size();
    const int L = static_cast<int>(m);

    // Markov lookups slice by the previous realized bin.
    std::size_t prev_bin = 0;
    int inflow_offset = 0;
    if (solved.model == Model::markov) {
        const auto& bins = s.markov_flow().bins;
        prev_bin = 0;
        double best = std::abs(inflows[0][0] - bins[0]);
        for (std::size_t b = 1; b < bins.size(); ++b) {
            const double dist = std::abs(inflows[0][0] - bins[b]);
            if (dist < best) {
                best = dist;
                prev_bin = b;
            }
        }
        inflow_offset = 1;
    }

    std::vector<double> stores(m);
    for (std::size_t j = 0; j < m; ++j) stores[j] = s.reservoirs[j].initial_store;

    RolloutTrace trace;
    trace.periods.resize(static_cast<std::size_t>(n));
    std::vector<double> column(D);

    for (int i = 0; i < n; ++i) {
        const auto ia = static_cast<std::size_t>(i);
        RolloutPeriod& rec = trace.periods[ia];
        rec.store_before = stores;
        rec.inflow.resize(m);
        for (std::size_t j = 0; j < m; ++j)
            rec.inflow[j] = inflows[j][static_cast<std::size_t>(i + (j == 0 ? inflow_offset : 0))];

        const PolicyTable& pt = solved.policies[ia];
        const int cps = pt.controls_per_state;
        const double r = s.demands[ia];
        const double c = s.costs.thermal_price;
        const double p = s.costs.deficit_penalty;
        const double K = s.costs.thermal_cap;

        // Interpolated policy controls at the current stores.
        std::vector<double> u(static_cast<std::size_t>(cps));
        for (int comp = 0; comp < cps; ++comp) {
            const std::size_t slice = prev_bin * D;
            for (std::size_t state = 0; state < D; ++state)
                column[state] =
                    pt.controls[(slice + state) * static_cast<std::size_t>(cps) +
                                static_cast<std::size_t>(comp)];
            u[static_cast<std::size_t>(comp)] = value_at(column, grid, stores);
        }

        double surplus_price = -s.costs.sale_price_at(i);
        rec.spill.assign(m, 0.0);

        switch (solved.model) {
            case Model::single: {
                double rel = std::clamp(u[0], 0.0, std::min(r, stores[0] + rec.inflow[0]));
                rec.hydro = rel;
                rec.release = {rel};
                const double raw = stores[0] + rec.inflow[0] - rel;
                rec.spill[0] = std::max(0.0, raw - s.reservoirs[0].capacity);
                stores[0] = std::min(s.reservoirs[0].capacity, std::max(0.0, raw));
                rec.thermal = std::clamp(r - rec.hydro, 0.0, K);
                rec.deficit = std::max(0.0, r - rec.hydro - K);
                rec.surplus = std::max(0.0, rec.hydro - r);
                break;
            }
            case Model::cascade: {
                double rel = std::clamp(u[0], 0.0, stores[0] + rec.inflow[0]);
                // Respect the demand bound: station energy rises with the
                // release, so bisect down when the lookup overshoots.
                auto hydro_at = [&](double v) {
                    double cum = v;
                    double total = 0.0;
                    for (const CascadeStation& st : s.cascade_stations) {
                        cum += st.lateral_inflows[ia];
                        total += std::min(st.pass_capacity, cum);
                    }
                    return total;
                };
                if (hydro_at(rel) > r) {
                    double lo = 0.0, hi = rel;
                    for (int it = 0; it < 64; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        if (hydro_at(mid) > r) hi = mid;
                        else lo = mid;
                    }
                    rel = lo;
                }
                rec.hydro = hydro_at(rel);
                rec.release = {rel};
                const double raw = stores[0] + rec.inflow[0] - rel;
                rec.spill[0] = std::max(0.0, raw - s.reservoirs[0].capacity);
                stores[0] = std::min(s.reservoirs[0].capacity, std::max(0.0, raw));
                rec.thermal = std::clamp(r - rec.hydro, 0.0, K);
                rec.deficit = std::max(0.0, r - rec.hydro - K);
                rec.surplus = std::max(0.0, rec.hydro - r);
                break;
            }
            case Model::multi:
            case Model::multi_penalty: {
                if (solved.model == Model::multi_penalty && !s.costs.sales_enabled())
                    surplus_price = *s.costs.demand_penalty;
                rec.release.resize(m);
                double upstream = 0.0;
                double total = 0.0;
                for (int j = 0; j < L; ++j) {
                    const auto jb = static_cast<std::size_t>(j);
                    const double bound = stores[jb] + rec.inflow[jb] + upstream;
                    const double rel = std::clamp(u[jb], 0.0, bound);
                    rec.release[jb] = rel;
                    const double raw = stores[jb] + upstream + rec.inflow[jb] - rel;
                    rec.spill[jb] = std::max(0.0, raw - s.reservoirs[jb].capacity);
                    stores[jb] = std::min(s.reservoirs[jb].capacity, std::max(0.0, raw));
                    upstream = rel;
                    total += rel;
                }
                rec.hydro = total;
                rec.thermal = std::clamp(r - total, 0.0, K);
                rec.deficit = std::max(0.0, r - total - K);
                rec.surplus = std::max(0.0, total - r);
                break;
            }
            case Model::aggregate: {
                double potential = 0.0;
                for (std::size_t j = 0; j < m; ++j) potential += stores[j] + rec.inflow[j];
                const double rel = std::clamp(u[0], 0.0, potential);
                rec.release = {rel};
                rec.hydro = rel;
                const double share = potential > 0.0 ? rel / potential : 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    const double raw = (1.0 - share) * (stores[j] + rec.inflow[j]);
                    rec.spill[j] = std::max(0.0, raw - s.reservoirs[j].capacity);
                    stores[j] = std::min(s.reservoirs[j].capacity, raw);
                }
                rec.thermal = std::clamp(r - rel, 0.0, K);
                rec.deficit = std::max(0.0, r - rel - K);
                rec.surplus = std::max(0.0, rel - r);
                break;
            }
            case Model::independent:
            case Model::markov: {
                double delta;
                if (solved.model == Model::independent) {
                    const auto& dist = s.indep_flow().per_period[ia];
                    delta = quantile(dist.support, dist.weights,
                                     s.indep_flow().confidence_level);
                } else {
                    const auto& flow = s.markov_flow();
                    delta = quantile(flow.bins, flow.transitions[ia][prev_bin],
                                     flow.confidence_level);
                }
                const double planned = std::clamp(u[0], 0.0, std::min(r, stores[0] + delta));
                const double avail = stores[0] + rec.inflow[0];
                const double delivered = std::min(planned, avail);
                rec.release = {delivered};
                rec.hydro = delivered;
                rec.thermal = std::clamp(r - planned, 0.0, K);
                rec.deficit = std::max(0.0, r - planned - K) + (planned - delivered);
                rec.surplus = std::max(0.0, planned - r);
                const double raw = avail - delivered;
                rec.spill[0] = std::max(0.0, raw - s.reservoirs[0].capacity);
                stores[0] = std::min(s.reservoirs[0].capacity, std::max(0.0, raw));
                if (solved.model == Model::markov) {
                    const auto& bins = s.markov_flow().bins;
                    std::size_t nb = 0;
                    double bd = std::abs(rec.inflow[0] - bins[0]);
                    for (std::size_t b = 1; b < bins.size(); ++b) {
                        const double dist = std::abs(rec.inflow[0] - bins[b]);
                        if (dist < bd) {
                            bd = dist;
                            nb = b;
                        }
                    }
                    prev_bin = nb;
                }
                break;
            }
        }

        rec.cost = rec.thermal * c + rec.deficit * p + rec.surplus * surplus_price;
        trace.total_cost += rec.cost;
    }
    return trace;
}

std::vector<std::vector<double>> sample_inflow_paths(const Scenario& s, int count,
                                                     std::uint64_t seed) {
    require_valid(s);
    std::mt19937_64 eng(seed);
    const auto uniform = [&eng]() {
        return static_cast<double>(eng() >> 11) * 0x1.0p-53;
    };
    const auto draw = [&uniform](const std::vector<double>& weights) {
        const double u = uniform();
        double cum = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            cum += weights[k];
            if (u < cum) return k;
        }
        return weights.size() - 1;
    };

    std::vector<std::vector<double>> paths;
    paths.reserve(static_cast<std::size_t>(count));
    for (int pth = 0; pth < count; ++pth) {
        std::vector<double> path;
        if (const auto* det = std::get_if<DeterministicFlow>(&s.flow)) {
            path = det->inflows[0];
        } else if (const auto* ind = std::get_if<IndependentFlow>(&s.flow)) {
            for (const auto& dist : ind->per_period) path.push_back(dist.support[draw(dist.weights)]);
        } else {
            const auto& mk = s.markov_flow();
            std::size_t bin = draw(mk.initial);
            path.push_back(mk.bins[bin]);
            for (int i = 0; i < s.n_periods; ++i) {
                bin = draw(mk.transitions[static_cast<std::size_t>(i)][bin]);
                path.push_back(mk.bins[bin]);
            }
        }
        paths.push_back(std::move(path));
    }
    return paths;
}

} // namespace hydrodp
