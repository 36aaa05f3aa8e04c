#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hydrodp/scenario.hpp"

namespace hydrodp {

// Product grid over reservoir stores: axis j has levels[j] points spaced
// steps[j] apart, level k sitting at k*steps[j]. Flat indices are row-major
// with axis 0 most significant.
struct Grid {
    std::vector<int> levels;
    std::vector<double> steps;

    static Grid from_reservoirs(const std::vector<Reservoir>& reservoirs);

    int dims() const { return static_cast<int>(levels.size()); }
    std::size_t size() const;
    double store(int axis, int level) const {
        return static_cast<double>(level) * steps[static_cast<std::size_t>(axis)];
    }
    double capacity(int axis) const {
        return store(axis, levels[static_cast<std::size_t>(axis)] - 1);
    }
    std::size_t flat(std::span<const int> idx) const;
    void unflatten(std::size_t flat, std::span<int> idx) const;
};

// f_i sampled on the grid. Markov tables carry one slice per previous-inflow
// bin: values[bin * grid.size() + state].
struct ValueTable {
    int stage = 0; // 1-based
    std::vector<double> values;
};

// Minimizing release(s) per state, controls_per_state entries each:
// controls[(bin * grid.size() + state) * controls_per_state + c].
struct PolicyTable {
    int stage = 0;
    int controls_per_state = 1;
    std::vector<double> controls;
};

// Multilinear interpolation of `values` (length grid.size()) at `point`,
// exact at grid nodes. Components must lie in [0, capacity(axis)] up to a
// tiny rounding slack; anything further out throws std::domain_error.
double value_at(std::span<const double> values, const Grid& grid, std::span<const double> point);

// Collapses every axis except `axis` at the given point coordinates
// (point[k] indexes axis k, entry `axis` ignored), leaving a 1-D slice along
// `axis` that interp1 can read. out must hold levels[axis] doubles.
void collapse_to_axis(std::span<const double> values, const Grid& grid,
                      std::span<const double> point, int axis, double* out);

// Queries that fell strictly between grid nodes since the last reset.
// Grid-aligned scenarios keep this at zero through entire solves.
std::uint64_t offgrid_queries();
void reset_offgrid_queries();
void note_offgrid_queries(std::uint64_t count);

} // namespace hydrodp
