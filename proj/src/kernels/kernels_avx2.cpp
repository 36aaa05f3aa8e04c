// AVX2 variants of the sweep kernels, 4 doubles per iteration with scalar
// remainder loops. Arithmetic mirrors the scalar reference operation for
// operation (no FMA contraction), so results are bit-identical and the
// argmin tie-break matches.

#include "hydrodp/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace hydrodp::kernels {
namespace {

// Tie behaviour of MINPD/MAXPD: the second operand wins on equality.
inline double smin(double a, double b) { return a < b ? a : b; }
inline double smax(double a, double b) { return a > b ? a : b; }

void stage_cost_avx2(const double* hydro, double* cost, std::size_t n,
                     const StageCostParams& p) {
    const __m256d demand = _mm256_set1_pd(p.demand);
    const __m256d cap = _mm256_set1_pd(p.thermal_cap);
    const __m256d tp = _mm256_set1_pd(p.thermal_price);
    const __m256d dp = _mm256_set1_pd(p.deficit_price);
    const __m256d sp = _mm256_set1_pd(p.surplus_price);
    const __m256d zero = _mm256_setzero_pd();

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d h = _mm256_loadu_pd(hydro + i);
        const __m256d gap = _mm256_sub_pd(demand, h);
        const __m256d thermal = _mm256_min_pd(_mm256_max_pd(gap, zero), cap);
        const __m256d deficit = _mm256_max_pd(_mm256_sub_pd(gap, cap), zero);
        const __m256d surplus = _mm256_max_pd(_mm256_sub_pd(zero, gap), zero);
        const __m256d c = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(thermal, tp), _mm256_mul_pd(deficit, dp)),
            _mm256_mul_pd(surplus, sp));
        _mm256_storeu_pd(cost + i, c);
    }
    for (; i < n; ++i) {
        const double gap = p.demand - hydro[i];
        const double thermal = smin(smax(gap, 0.0), p.thermal_cap);
        const double deficit = smax(gap - p.thermal_cap, 0.0);
        const double surplus = smax(-gap, 0.0);
        cost[i] = thermal * p.thermal_price + deficit * p.deficit_price
                + surplus * p.surplus_price;
    }
}

void interp1_avx2(const double* table, int count, double step,
                  const double* query, double* out, std::size_t n) {
    const double topd = static_cast<double>(count - 1);
    const __m256d vstep = _mm256_set1_pd(step);
    const __m256d vtop = _mm256_set1_pd(topd);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m128i maxlo = _mm_set1_epi32(count - 2);
    const __m128i ione = _mm_set1_epi32(1);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d pos = _mm256_div_pd(_mm256_loadu_pd(query + i), vstep);
        pos = _mm256_min_pd(_mm256_max_pd(pos, zero), vtop);
        __m128i lo = _mm256_cvttpd_epi32(pos);
        lo = _mm_min_epi32(lo, maxlo);
        const __m256d t = _mm256_sub_pd(pos, _mm256_cvtepi32_pd(lo));
        const __m256d v0 = _mm256_i32gather_pd(table, lo, 8);
        const __m256d v1 = _mm256_i32gather_pd(table, _mm_add_epi32(lo, ione), 8);
        const __m256d r = _mm256_add_pd(_mm256_mul_pd(v0, _mm256_sub_pd(one, t)),
                                        _mm256_mul_pd(v1, t));
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) {
        double pos = query[i] / step;
        pos = smin(smax(pos, 0.0), topd);
        int lo = static_cast<int>(pos);
        if (lo > count - 2) lo = count - 2;
        const double t = pos - static_cast<double>(lo);
        out[i] = table[lo] * (1.0 - t) + table[lo + 1] * t;
    }
}

void shift_clamp_avx2(const double* u, double* out, std::size_t n,
                      double base, double lo, double hi) {
    const __m256d vbase = _mm256_set1_pd(base);
    const __m256d vlo = _mm256_set1_pd(lo);
    const __m256d vhi = _mm256_set1_pd(hi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_sub_pd(vbase, _mm256_loadu_pd(u + i));
        _mm256_storeu_pd(out + i, _mm256_min_pd(vhi, _mm256_max_pd(vlo, v)));
    }
    for (; i < n; ++i) out[i] = smin(hi, smax(lo, base - u[i]));
}

void relu_scaled_avx2(const double* x, double* out, std::size_t n,
                      double threshold, double scale) {
    const __m256d vth = _mm256_set1_pd(threshold);
    const __m256d vsc = _mm256_set1_pd(scale);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vth);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(vsc, _mm256_max_pd(zero, d)));
    }
    for (; i < n; ++i) out[i] = scale * smax(0.0, x[i] - threshold);
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void axpy_avx2(double w, const double* x, double* acc, std::size_t n) {
    const __m256d vw = _mm256_set1_pd(w);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_add_pd(_mm256_loadu_pd(acc + i),
                                        _mm256_mul_pd(vw, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(acc + i, r);
    }
    for (; i < n; ++i) acc[i] = acc[i] + w * x[i];
}

std::size_t argmin_avx2(const double* v, std::size_t n) {
    if (n < 8) return scalar_ops().argmin(v, n);

    __m256d best = _mm256_loadu_pd(v);
    __m256d bidx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    __m256d cur = _mm256_setr_pd(4.0, 5.0, 6.0, 7.0);
    const __m256d four = _mm256_set1_pd(4.0);

    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) {
        const __m256d val = _mm256_loadu_pd(v + i);
        const __m256d lt = _mm256_cmp_pd(val, best, _CMP_LT_OQ);
        best = _mm256_blendv_pd(best, val, lt);
        bidx = _mm256_blendv_pd(bidx, cur, lt);
        cur = _mm256_add_pd(cur, four);
    }

    alignas(32) double bv[4];
    alignas(32) double bi[4];
    _mm256_store_pd(bv, best);
    _mm256_store_pd(bi, bidx);
    double best_v = bv[0];
    double best_i = bi[0];
    for (int lane = 1; lane < 4; ++lane) {
        if (bv[lane] < best_v || (bv[lane] == best_v && bi[lane] < best_i)) {
            best_v = bv[lane];
            best_i = bi[lane];
        }
    }
    std::size_t best_idx = static_cast<std::size_t>(best_i);
    for (; i < n; ++i) {
        if (v[i] < best_v) {
            best_v = v[i];
            best_idx = i;
        }
    }
    return best_idx;
}

} // namespace

const Ops* avx2_ops() {
    static const Ops ops{
        stage_cost_avx2, interp1_avx2, shift_clamp_avx2,
        relu_scaled_avx2, add_avx2, axpy_avx2, argmin_avx2,
        "avx2",
    };
    return &ops;
}

} // namespace hydrodp::kernels

#else // !__AVX2__

namespace hydrodp::kernels {
const Ops* avx2_ops() { return nullptr; }
} // namespace hydrodp::kernels

#endif
