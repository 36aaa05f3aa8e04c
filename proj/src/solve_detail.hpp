#pragma once

// Shared internals of the backward-induction solvers. Not installed.

#include <cmath>
#include <vector>

#include "hydrodp/grid.hpp"
#include "hydrodp/kernels.hpp"
#include "hydrodp/scenario.hpp"

namespace hydrodp::detail {

// Refinement factors must be positive integers or the candidate lattices
// degenerate.
void check_options(int control_refine, int aggregate_refine);

// Release candidates: the lattice 0, dc, 2dc, ... strictly below cap, then
// cap itself, so the interval endpoint is always reachable.
inline void fill_candidates(std::vector<double>& out, double cap, double dc) {
    out.clear();
    if (!(cap > 0.0)) {
        out.push_back(0.0);
        return;
    }
    for (std::size_t j = 0;; ++j) {
        const double u = static_cast<double>(j) * dc;
        if (!(u < cap)) break;
        out.push_back(u);
    }
    out.push_back(cap);
}

// Per-worker buffers for the candidate sweeps.
struct Scratch {
    std::vector<double> u, cost, succ, cont, pen, tmp, acc, tot, slice;
    void reserve(std::size_t n) {
        u.reserve(n);
        cost.reserve(n);
        succ.reserve(n);
        cont.reserve(n);
        pen.reserve(n);
        tmp.reserve(n);
        acc.reserve(n);
        tot.reserve(n);
    }
};

// Off-grid instrumentation for kernel-interpolated queries: counts entries
// whose position on the step lattice has a fractional part.
inline std::uint64_t count_offgrid(const double* q, std::size_t n, double step, int levels) {
    const double top = static_cast<double>(levels - 1);
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double pos = q[i] / step;
        pos = pos < 0.0 ? 0.0 : (pos > top ? top : pos);
        if (pos - std::floor(pos) != 0.0) ++count;
    }
    return count;
}

// Surplus price passed to the stage-cost kernel: the sale credit by default,
// or the positive relaxation coefficient for the penalty-mode chain solver.
inline double sale_coefficient(const CostParams& costs, int period) {
    return -costs.sale_price_at(period);
}

} // namespace hydrodp::detail
