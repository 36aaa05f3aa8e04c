#pragma once

#include <cstddef>
#include <string_view>

namespace hydrodp::kernels {

// Economics of one period: demand is met by hydro first, then thermal up to
// thermal_cap at thermal_price, then deficit at deficit_price. Hydro beyond
// demand is priced at surplus_price per unit (negative = sale credit,
// positive = overshoot penalty).
struct StageCostParams {
    double demand = 0.0;
    double thermal_price = 0.0;
    double deficit_price = 0.0;
    double thermal_cap = 0.0;
    double surplus_price = 0.0;
};

// Batched inner-loop primitives of the backward-induction sweeps. Every
// backend must produce bit-identical results to the scalar reference; the
// solvers rely on that for reproducible tie-breaking.
struct Ops {
    // cost[i] = tp*clamp(d - h[i], 0, cap) + dp*max(0, d - h[i] - cap)
    //         + sp*max(0, h[i] - d)
    void (*stage_cost)(const double* hydro, double* cost, std::size_t n,
                       const StageCostParams& p);
    // Piecewise-linear read of a table with `count` nodes spaced `step`
    // apart, starting at 0. Queries are clamped into [0, (count-1)*step].
    void (*interp1)(const double* table, int count, double step,
                    const double* query, double* out, std::size_t n);
    // out[i] = min(hi, max(lo, base - u[i]))
    void (*shift_clamp)(const double* u, double* out, std::size_t n,
                        double base, double lo, double hi);
    // out[i] = scale * max(0, x[i] - threshold)
    void (*relu_scaled)(const double* x, double* out, std::size_t n,
                        double threshold, double scale);
    // out[i] = a[i] + b[i]
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    // acc[i] += w * x[i]
    void (*axpy)(double w, const double* x, double* acc, std::size_t n);
    // First index of the minimum (ties resolve to the smallest index).
    // Inputs must be NaN-free.
    std::size_t (*argmin)(const double* v, std::size_t n);
    const char* name;
};

// Scalar reference backend; always available.
const Ops& scalar_ops();

// AVX2 backend, or nullptr when the build or the CPU lacks it.
const Ops* avx2_ops();

// Currently selected backend. Picks the best available on first use; the
// HYDRODP_KERNELS environment variable ("scalar", "avx2", "auto") overrides.
const Ops& active();

// Force a backend by name. Returns false (and leaves the selection alone)
// when the name is unknown or the backend is unavailable.
bool select_backend(std::string_view name);

} // namespace hydrodp::kernels
