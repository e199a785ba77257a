#pragma once

#include <array>
#include <map>
#include <vector>

#include "adaptv/grid.hpp"

namespace adaptv {

/// Dyadic square of side 2^-level at grid position (ix, iy) in [0, 2^level)^2.
/// ix indexes the x (column) direction, iy the y (row) direction.
struct DyadicCell {
    int level = 0;
    int ix = 0;
    int iy = 0;

    friend bool operator<(const DyadicCell& a, const DyadicCell& b) {
        if (a.level != b.level) return a.level < b.level;
        if (a.iy != b.iy) return a.iy < b.iy;
        return a.ix < b.ix;
    }
    friend bool operator==(const DyadicCell& a, const DyadicCell& b) {
        return a.level == b.level && a.ix == b.ix && a.iy == b.iy;
    }
};

bool cell_valid(const DyadicCell& c);

/// Admissible partition of the unit square into dyadic cells.
struct DyadicPartition {
    std::vector<DyadicCell> cells;  // kept sorted by (level, iy, ix)

    size_t size() const { return cells.size(); }
};

/// The trivial partition {(0,1)^2}.
DyadicPartition root_partition();

/// The four children of a cell, one dyadic subdivision down.
std::array<DyadicCell, 4> subdivide(const DyadicCell& cell);

/// Replaces `cell` by its four children. Throws if the cell is absent.
void subdivide_in(DyadicPartition& partition, const DyadicCell& cell);

/// True iff the cells are pairwise disjoint and cover the unit square exactly.
bool is_tiling(const DyadicPartition& partition);

/// Pixel rectangle covered by a cell on an H x W grid:
/// rows [floor(iy*H/2^level), floor((iy+1)*H/2^level)), cols analogous.
/// May be empty when 2^level exceeds the grid size.
PixelRect pixel_range(const DyadicCell& cell, int height, int width);

/// Box constraint [c0, 1/c0] on tuning parameters, 0 < c0 < 1.
struct BoxConstraint {
    double c0 = 0.01;

    double lower() const { return c0; }
    double upper() const { return 1.0 / c0; }
    double clamp(double v) const {
        if (v < lower()) return lower();
        if (v > upper()) return upper();
        return v;
    }
    bool valid() const { return c0 > 0.0 && c0 < 1.0; }
};

/// Piecewise constant weight: per-cell values spread over the cells' pixel
/// ranges. Every cell needs a value (missing -> invalid_argument) and all
/// values must be > 0 (else domain_error).
WeightMap assemble_weight(const DyadicPartition& partition,
                          const std::map<DyadicCell, double>& per_cell_values,
                          int height, int width);

/// Discrete Moreau-Yosida envelope w_k(x) = min_y { w(y) + k*d(x,y) } with d
/// the Euclidean distance in unit-square coordinates. Exact on small grids;
/// grids larger than 128^2 use a two-pass chamfer propagation whose path
/// metric overestimates d by less than 1%.
WeightMap mollify_lipschitz(const WeightMap& w, double k);

}  // namespace adaptv
