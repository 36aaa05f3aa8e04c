#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "hydrodp/oracle.hpp"
#include "hydrodp/solve.hpp"
#include "support/gen.hpp"

using namespace hydrodp;

TEST_CASE("allocate splits the release in proportion to potential") {
    const std::vector<double> caps = {100.0, 100.0};
    const auto succ = allocate(std::vector<double>{2.0, 2.0}, std::vector<double>{1.0, 1.0},
                               caps, 3.0);
    CHECK(succ[0] == doctest::Approx(1.5));
    CHECK(succ[1] == doctest::Approx(1.5));

    const auto hold = allocate(std::vector<double>{2.0, 1.0}, std::vector<double>{1.0, 0.5},
                               caps, 0.0);
    CHECK(hold[0] == 3.0);
    CHECK(hold[1] == 1.5);

    const auto drain = allocate(std::vector<double>{2.0, 1.0}, std::vector<double>{1.0, 0.5},
                                caps, 4.5);
    CHECK(drain[0] == 0.0);
    CHECK(drain[1] == 0.0);

    CHECK_THROWS_AS(static_cast<void>(allocate(std::vector<double>{1.0},
                                               std::vector<double>{0.0}, caps, 2.0)),
                    std::domain_error);
}

TEST_CASE("allocation clamps at capacity") {
    const auto succ = allocate(std::vector<double>{2.0, 2.0}, std::vector<double>{2.0, 0.0},
                               std::vector<double>{3.0, 3.0}, 0.0);
    CHECK(succ[0] == 3.0); // spilled above the cap
    CHECK(succ[1] == 2.0);
}

TEST_CASE("unclamped allocation conserves water") {
    gen::Rng rng(61);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t m = static_cast<std::size_t>(rng.i(1, 4));
        std::vector<double> q(m), x(m), caps(m, 1e9);
        double M = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            q[j] = rng.i(0, 5);
            x[j] = rng.i(0, 3);
            M += q[j] + x[j];
        }
        const double u = M * 0.37;
        if (u > M) continue;
        const auto succ = allocate(q, x, caps, u);
        double sum = 0.0;
        for (double v : succ) sum += v;
        CHECK(std::abs(sum - (M - u)) <= 1e-12 * std::max(1.0, M));
    }
}

TEST_CASE("one 1-D minimization per grid state per stage") {
    Scenario s;
    s.n_periods = 12;
    s.costs.thermal_price = 1.0;
    s.costs.deficit_penalty = 5.0;
    s.costs.thermal_cap = 2.0;
    DeterministicFlow det;
    for (int levels : {5, 3, 4}) {
        s.reservoirs.push_back({static_cast<double>(levels - 1), 1.0, levels, std::nullopt});
        det.inflows.push_back(std::vector<double>(12, 1.0));
    }
    for (int i = 0; i < 12; ++i) s.demands.push_back(4.0);
    s.flow = std::move(det);

    const SolveResult r = solve_aggregate(s);
    REQUIRE(r.minimizations_per_stage.size() == 12);
    for (std::size_t count : r.minimizations_per_stage) CHECK(count == 60);
    for (std::size_t evals : r.evaluations_per_stage) CHECK(evals > 60);
}

TEST_CASE("single-reservoir aggregate matches the single solver on the lattice") {
    gen::Rng rng(67);
    for (int rep = 0; rep < 20; ++rep) {
        const Scenario s = gen::single(rng); // integer lattice, no sales
        const SolveResult a = solve_single(s);
        const SolveResult b = solve_aggregate(s);
        REQUIRE(a.values.size() == b.values.size());
        for (std::size_t t = 0; t < a.values.size(); ++t)
            for (std::size_t k = 0; k < a.values[t].values.size(); ++k)
                CHECK(std::abs(a.values[t].values[k] - b.values[t].values[k]) <= 1e-12);
    }
}

TEST_CASE("proportional allocation preserves symmetry") {
    Scenario s;
    s.n_periods = 3;
    s.demands = {3.0, 2.0, 4.0};
    s.costs.thermal_price = 1.0;
    s.costs.deficit_penalty = 6.0;
    s.costs.thermal_cap = 1.0;
    s.reservoirs.push_back({3.0, 2.0, 4, std::nullopt});
    s.reservoirs.push_back({3.0, 2.0, 4, std::nullopt});
    s.flow = DeterministicFlow{{{1.0, 2.0, 0.0}, {1.0, 2.0, 0.0}}};
    const SolveResult r = solve_aggregate(s);
    // Swapping the two axes leaves every table unchanged.
    std::vector<int> idx(2);
    for (const auto& vt : r.values)
        for (std::size_t f = 0; f < r.grid.size(); ++f) {
            r.grid.unflatten(f, idx);
            std::swap(idx[0], idx[1]);
            CHECK(vt.values[f] == doctest::Approx(vt.values[r.grid.flat(idx)]).epsilon(1e-12));
        }
}

TEST_CASE("sale credits keep the sweep in step with the enumeration") {
    gen::Rng rng(73);
    for (int rep = 0; rep < 15; ++rep) {
        const hydrodp::Scenario s = gen::single(rng, 3, 5, true); // a_i > 0
        const double dp = solve_aggregate(s).initial_value;
        const double bf = hydrodp::brute_force_optimum(s, Model::aggregate).cost;
        CHECK(std::abs(dp - bf) <= 1e-9);
    }
}

TEST_CASE("a finer release lattice never raises the tables") {
    gen::Rng rng(79);
    for (int rep = 0; rep < 10; ++rep) {
        const hydrodp::Scenario s = gen::single(rng);
        SolveOptions coarse, fine;
        fine.control_refine = 2;
        const SolveResult a = solve_single(s, coarse);
        const SolveResult b = solve_single(s, fine);
        for (std::size_t t = 0; t < a.values.size(); ++t)
            for (std::size_t k = 0; k < a.values[t].values.size(); ++k)
                CHECK(b.values[t].values[k] <= a.values[t].values[k] + 1e-12);
    }
}

TEST_CASE("scalar-control restriction never beats the exact chain relaxation") {
    gen::Rng rng(71);
    for (int rep = 0; rep < 8; ++rep) {
        const Scenario s = gen::multi(rng, 2, 3, 4, true); // sales enabled
        const SolveResult agg = solve_aggregate(s);
        SolveOptions fine;
        fine.control_refine = 2;
        const SolveResult exact = solve_multi(s, true, fine);
        CHECK(agg.initial_value >= exact.initial_value - 1e-9);
    }
}
