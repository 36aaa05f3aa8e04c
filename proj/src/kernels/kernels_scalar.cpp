// Scalar reference kernels. This translation unit is compiled with
// -ffp-contract=off so the vector backends can reproduce it bit for bit
// (no compiler-introduced fused multiply-adds).

#include "hydrodp/kernels.hpp"

namespace hydrodp::kernels {
namespace {

// Same tie behaviour as MINPD/MAXPD: the second operand wins on equality,
// which pins down signed zeros. Inputs are NaN-free by contract.
inline double smin(double a, double b) { return a < b ? a : b; }
inline double smax(double a, double b) { return a > b ? a : b; }

void stage_cost_scalar(const double* hydro, double* cost, std::size_t n,
                       const StageCostParams& p) {
    for (std::size_t i = 0; i < n; ++i) {
        const double gap = p.demand - hydro[i];
        const double thermal = smin(smax(gap, 0.0), p.thermal_cap);
        const double deficit = smax(gap - p.thermal_cap, 0.0);
        const double surplus = smax(-gap, 0.0);
        cost[i] = thermal * p.thermal_price + deficit * p.deficit_price
                + surplus * p.surplus_price;
    }
}

void interp1_scalar(const double* table, int count, double step,
                    const double* query, double* out, std::size_t n) {
    const double top = static_cast<double>(count - 1);
    for (std::size_t i = 0; i < n; ++i) {
        double pos = query[i] / step;
        pos = smin(smax(pos, 0.0), top);
        int lo = static_cast<int>(pos); // pos >= 0, truncation == floor
        if (lo > count - 2) lo = count - 2;
        const double t = pos - static_cast<double>(lo);
        out[i] = table[lo] * (1.0 - t) + table[lo + 1] * t;
    }
}

void shift_clamp_scalar(const double* u, double* out, std::size_t n,
                        double base, double lo, double hi) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = smin(hi, smax(lo, base - u[i]));
}

void relu_scaled_scalar(const double* x, double* out, std::size_t n,
                        double threshold, double scale) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = scale * smax(0.0, x[i] - threshold);
}

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void axpy_scalar(double w, const double* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] = acc[i] + w * x[i];
}

std::size_t argmin_scalar(const double* v, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (v[i] < v[best]) best = i;
    return best;
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops{
        stage_cost_scalar, interp1_scalar, shift_clamp_scalar,
        relu_scaled_scalar, add_scalar, axpy_scalar, argmin_scalar,
        "scalar",
    };
    return ops;
}

} // namespace hydrodp::kernels
