#include "hydrodp/grid.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace hydrodp {
namespace {

std::atomic<std::uint64_t> g_offgrid{0};

// Queries may overshoot the axis range by rounding noise from upstream
// arithmetic; anything beyond this relative slack is a caller bug.
constexpr double kRangeSlack = 1e-9;

struct AxisPos {
    int lo;
    double t;
};

inline AxisPos locate(const Grid& g, int axis, double coord) {
    const int d = g.levels[static_cast<std::size_t>(axis)];
    const double step = g.steps[static_cast<std::size_t>(axis)];
    const double top = static_cast<double>(d - 1);
    double pos = coord / step;
    if (pos < -kRangeSlack * top || pos > top * (1.0 + kRangeSlack))
        throw std::domain_error("value_at: point component outside the grid range");
    pos = pos < 0.0 ? 0.0 : (pos > top ? top : pos);
    int lo = static_cast<int>(pos);
    if (lo > d - 2) lo = d - 2;
    return {lo, pos - static_cast<double>(lo)};
}

} // namespace

Grid Grid::from_reservoirs(const std::vector<Reservoir>& reservoirs) {
    Grid g;
    g.levels.reserve(reservoirs.size());
    g.steps.reserve(reservoirs.size());
    for (const Reservoir& r : reservoirs) {
        g.levels.push_back(r.level_count);
        g.steps.push_back(r.step());
    }
    return g;
}

std::size_t Grid::size() const {
    std::size_t n = 1;
    for (int d : levels) n *= static_cast<std::size_t>(d);
    return n;
}

std::size_t Grid::flat(std::span<const int> idx) const {
    std::size_t f = 0;
    for (std::size_t k = 0; k < levels.size(); ++k)
        f = f * static_cast<std::size_t>(levels[k]) + static_cast<std::size_t>(idx[k]);
    return f;
}

void Grid::unflatten(std::size_t flat, std::span<int> idx) const {
    for (std::size_t k = levels.size(); k-- > 0;) {
        const auto d = static_cast<std::size_t>(levels[k]);
        idx[k] = static_cast<int>(flat % d);
        flat /= d;
    }
}

double value_at(std::span<const double> values, const Grid& grid,
                std::span<const double> point) {
    const int m = grid.dims();
    if (m < 1 || m > 8) throw std::domain_error("value_at: supports 1 to 8 axes");
    AxisPos pos[8];
    bool offgrid = false;
    for (int k = 0; k < m; ++k) {
        pos[k] = locate(grid, k, point[static_cast<std::size_t>(k)]);
        if (pos[k].t != 0.0 && pos[k].t != 1.0) offgrid = true;
    }
    if (offgrid) g_offgrid.fetch_add(1, std::memory_order_relaxed);

    // Strides of each axis in the flat layout.
    std::size_t stride[8];
    std::size_t s = 1;
    for (int k = m; k-- > 0;) {
        stride[k] = s;
        s *= static_cast<std::size_t>(grid.levels[static_cast<std::size_t>(k)]);
    }

    double acc = 0.0;
    const unsigned corners = 1u << m;
    for (unsigned c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t idx = 0;
        for (int k = 0; k < m; ++k) {
            const bool hi = (c >> k) & 1u;
            w *= hi ? pos[k].t : (1.0 - pos[k].t);
            idx += stride[k] * static_cast<std::size_t>(pos[k].lo + (hi ? 1 : 0));
        }
        acc += w * values[idx];
    }
    return acc;
}

void collapse_to_axis(std::span<const double> values, const Grid& grid,
                      std::span<const double> point, int axis, double* out) {
    const int m = grid.dims();
    if (m < 1 || m > 8) throw std::domain_error("collapse_to_axis: supports 1 to 8 axes");
    AxisPos pos[8];
    bool offgrid = false;
    for (int k = 0; k < m; ++k) {
        if (k == axis) continue;
        pos[k] = locate(grid, k, point[static_cast<std::size_t>(k)]);
        if (pos[k].t != 0.0 && pos[k].t != 1.0) offgrid = true;
    }
    if (offgrid) g_offgrid.fetch_add(1, std::memory_order_relaxed);

    std::size_t stride[8];
    std::size_t s = 1;
    for (int k = m; k-- > 0;) {
        stride[k] = s;
        s *= static_cast<std::size_t>(grid.levels[static_cast<std::size_t>(k)]);
    }

    const int d_axis = grid.levels[static_cast<std::size_t>(axis)];
    for (int lev = 0; lev < d_axis; ++lev) out[lev] = 0.0;

    const unsigned corners = 1u << (m - 1);
    for (unsigned c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t base = 0;
        unsigned bit = 0;
        for (int k = 0; k < m; ++k) {
            if (k == axis) continue;
            const bool hi = (c >> bit) & 1u;
            ++bit;
            w *= hi ? pos[k].t : (1.0 - pos[k].t);
            base += stride[k] * static_cast<std::size_t>(pos[k].lo + (hi ? 1 : 0));
        }
        if (w == 0.0) continue;
        for (int lev = 0; lev < d_axis; ++lev)
            out[lev] += w * values[base + stride[axis] * static_cast<std::size_t>(lev)];
    }
}

std::uint64_t offgrid_queries() { return g_offgrid.load(std::memory_order_relaxed); }
void reset_offgrid_queries() { g_offgrid.store(0, std::memory_order_relaxed); }
void note_offgrid_queries(std::uint64_t count) {
    if (count) g_offgrid.fetch_add(count, std::memory_order_relaxed);
}

} // namespace hydrodp
