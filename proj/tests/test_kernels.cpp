#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "hydrodp/kernels.hpp"
#include "hydrodp/solve.hpp"
#include "support/gen.hpp"

using namespace hydrodp;

namespace {

std::vector<double> random_vec(std::mt19937_64& eng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(eng);
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("kernel backends produce bit-identical results") {
    const kernels::Ops& scalar = kernels::scalar_ops();
    const kernels::Ops* avx2 = kernels::avx2_ops();
    if (!avx2) {
        MESSAGE("AVX2 backend not built; scalar-only platform");
        return;
    }

    std::mt19937_64 eng(20240811);
    // Sizes straddle the 4-lane blocks to cover the remainder loops.
    for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 13u, 64u, 257u}) {
        for (int rep = 0; rep < 20; ++rep) {
            const auto hydro = random_vec(eng, n, -2.0, 12.0);
            kernels::StageCostParams p;
            p.demand = random_vec(eng, 1, 0.0, 10.0)[0];
            p.thermal_price = random_vec(eng, 1, 0.0, 3.0)[0];
            p.deficit_price = p.thermal_price + random_vec(eng, 1, 0.1, 5.0)[0];
            p.thermal_cap = random_vec(eng, 1, 0.0, 4.0)[0];
            p.surplus_price = random_vec(eng, 1, -2.0, 2.0)[0];

            std::vector<double> a(n), b(n);
            scalar.stage_cost(hydro.data(), a.data(), n, p);
            avx2->stage_cost(hydro.data(), b.data(), n, p);
            CHECK(bitwise_equal(a, b));

            const int count = 2 + static_cast<int>(eng() % 9);
            const double step = 0.25 + random_vec(eng, 1, 0.0, 2.0)[0];
            const auto table =
                random_vec(eng, static_cast<std::size_t>(count), -50.0, 50.0);
            const auto query =
                random_vec(eng, n, -0.5 * step, step * static_cast<double>(count));
            scalar.interp1(table.data(), count, step, query.data(), a.data(), n);
            avx2->interp1(table.data(), count, step, query.data(), b.data(), n);
            CHECK(bitwise_equal(a, b));

            const double base = random_vec(eng, 1, -1.0, 10.0)[0];
            scalar.shift_clamp(hydro.data(), a.data(), n, base, 0.0, 7.5);
            avx2->shift_clamp(hydro.data(), b.data(), n, base, 0.0, 7.5);
            CHECK(bitwise_equal(a, b));

            scalar.relu_scaled(hydro.data(), a.data(), n, base, p.deficit_price);
            avx2->relu_scaled(hydro.data(), b.data(), n, base, p.deficit_price);
            CHECK(bitwise_equal(a, b));

            const auto other = random_vec(eng, n, -5.0, 5.0);
            scalar.add(hydro.data(), other.data(), a.data(), n);
            avx2->add(hydro.data(), other.data(), b.data(), n);
            CHECK(bitwise_equal(a, b));

            a = other;
            b = other;
            scalar.axpy(0.3, hydro.data(), a.data(), n);
            avx2->axpy(0.3, hydro.data(), b.data(), n);
            CHECK(bitwise_equal(a, b));

            CHECK(scalar.argmin(hydro.data(), n) == avx2->argmin(hydro.data(), n));
        }
    }
}

TEST_CASE("argmin breaks ties toward the first index") {
    const kernels::Ops& scalar = kernels::scalar_ops();
    const kernels::Ops* avx2 = kernels::avx2_ops();

    std::vector<double> v = {5.0, 2.0, 7.0, 2.0, 2.0, 9.0, 2.0, 3.0, 2.0, 2.0, 2.0};
    CHECK(scalar.argmin(v.data(), v.size()) == 1);
    if (avx2) CHECK(avx2->argmin(v.data(), v.size()) == 1);

    // Minimum only in the scalar tail after the vector blocks.
    std::vector<double> w(21, 4.0);
    w[20] = -1.0;
    CHECK(scalar.argmin(w.data(), w.size()) == 20);
    if (avx2) CHECK(avx2->argmin(w.data(), w.size()) == 20);

    // All-equal input.
    std::vector<double> e(17, 1.25);
    CHECK(scalar.argmin(e.data(), e.size()) == 0);
    if (avx2) CHECK(avx2->argmin(e.data(), e.size()) == 0);
}

TEST_CASE("interp1 is exact at nodes and clamps out-of-range queries") {
    const kernels::Ops& ops = kernels::active();
    const std::vector<double> table = {10.0, 20.0, 5.0, 40.0};
    const double step = 0.5;
    std::vector<double> q = {0.0, 0.5, 1.0, 1.5, 0.25, 2.0, -3.0};
    std::vector<double> out(q.size());
    ops.interp1(table.data(), 4, step, q.data(), out.data(), q.size());
    CHECK(out[0] == 10.0);
    CHECK(out[1] == 20.0);
    CHECK(out[2] == 5.0);
    CHECK(out[3] == 40.0);
    CHECK(out[4] == doctest::Approx(15.0));
    CHECK(out[5] == 40.0); // beyond the last node
    CHECK(out[6] == 10.0); // below zero
}

TEST_CASE("whole solves are bit-identical across backends") {
    if (!kernels::avx2_ops()) return;
    gen::Rng rng(771);
    for (int rep = 0; rep < 6; ++rep) {
        // Non-lattice data as well: scale one instance off the integer grid.
        hydrodp::Scenario sd = gen::single(rng);
        if (rep % 2 == 1) {
            sd.reservoirs[0].capacity *= 1.37;
            sd.reservoirs[0].initial_store *= 1.37;
            for (double& x : std::get<hydrodp::DeterministicFlow>(sd.flow).inflows[0]) x *= 1.37;
        }
        const hydrodp::Scenario si = gen::independent(rng);
        const hydrodp::Scenario sm = gen::markov(rng);
        const hydrodp::Scenario sc = gen::cascade(rng);

        REQUIRE(kernels::select_backend("scalar"));
        const auto a1 = hydrodp::solve_single(sd);
        const auto a2 = hydrodp::solve_independent(si);
        const auto a3 = hydrodp::solve_markov(sm);
        const auto a4 = hydrodp::solve_cascade(sc);
        REQUIRE(kernels::select_backend("avx2"));
        const auto b1 = hydrodp::solve_single(sd);
        const auto b2 = hydrodp::solve_independent(si);
        const auto b3 = hydrodp::solve_markov(sm);
        const auto b4 = hydrodp::solve_cascade(sc);
        REQUIRE(kernels::select_backend("auto"));

        const auto same = [](const hydrodp::SolveResult& x, const hydrodp::SolveResult& y) {
            REQUIRE(x.values.size() == y.values.size());
            for (std::size_t t = 0; t < x.values.size(); ++t) {
                CHECK(bitwise_equal(x.values[t].values, y.values[t].values));
                CHECK(bitwise_equal(x.policies[t].controls, y.policies[t].controls));
            }
            CHECK(std::memcmp(&x.initial_value, &y.initial_value, sizeof(double)) == 0);
        };
        same(a1, b1);
        same(a2, b2);
        same(a3, b3);
        same(a4, b4);
    }
}

TEST_CASE("backend selection honors explicit names") {
    REQUIRE(kernels::select_backend("scalar"));
    CHECK(std::string(kernels::active().name) == "scalar");
    CHECK_FALSE(kernels::select_backend("bogus"));
    CHECK(std::string(kernels::active().name) == "scalar");
    if (kernels::avx2_ops()) {
        CHECK(kernels::select_backend("avx2"));
        CHECK(std::string(kernels::active().name) == "avx2");
    }
    REQUIRE(kernels::select_backend("auto"));
}
