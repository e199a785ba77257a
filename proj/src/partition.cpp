#include "adaptv/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>

namespace adaptv {

bool cell_valid(const DyadicCell& c) {
    if (c.level < 0 || c.level > 30) return false;
    const int n = 1 << c.level;
    return c.ix >= 0 && c.ix < n && c.iy >= 0 && c.iy < n;
}

DyadicPartition root_partition() {
    DyadicPartition p;
    p.cells.push_back(DyadicCell{0, 0, 0});
    return p;
}

std::array<DyadicCell, 4> subdivide(const DyadicCell& cell) {
    if (!cell_valid(cell)) throw std::invalid_argument("subdivide: invalid cell");
    std::array<DyadicCell, 4> out{};
    int k = 0;
    for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a)
            out[k++] = DyadicCell{cell.level + 1, 2 * cell.ix + a, 2 * cell.iy + b};
    return out;
}

void subdivide_in(DyadicPartition& partition, const DyadicCell& cell) {
    auto it = std::find(partition.cells.begin(), partition.cells.end(), cell);
    if (it == partition.cells.end()) throw std::invalid_argument("subdivide_in: cell not in partition");
    partition.cells.erase(it);
    for (const DyadicCell& c : subdivide(cell)) partition.cells.push_back(c);
    std::sort(partition.cells.begin(), partition.cells.end());
}

bool is_tiling(const DyadicPartition& partition) {
    if (partition.cells.empty()) return false;
    int max_level = 0;
    std::set<DyadicCell> keys;
    for (const DyadicCell& c : partition.cells) {
        if (!cell_valid(c)) return false;
        if (!keys.insert(c).second) return false;  // duplicate
        max_level = std::max(max_level, c.level);
    }
    // Disjointness: no cell may be a strict ancestor of another.
    for (const DyadicCell& c : partition.cells) {
        DyadicCell a = c;
        while (a.level > 0) {
            a = DyadicCell{a.level - 1, a.ix / 2, a.iy / 2};
            if (keys.count(a)) return false;
        }
    }
    // Coverage: total measure must be exactly 1 (in units of 4^-max_level).
    if (max_level > 30) return false;
    unsigned long long total = 0;
    const unsigned long long full = 1ULL << (2 * max_level);
    for (const DyadicCell& c : partition.cells)
        total += 1ULL << (2 * (max_level - c.level));
    return total == full;
}

PixelRect pixel_range(const DyadicCell& cell, int height, int width) {
    if (!cell_valid(cell)) throw std::invalid_argument("pixel_range: invalid cell");
    if (height < 1 || width < 1) throw std::invalid_argument("pixel_range: dims must be >= 1");
    const long long n = 1LL << cell.level;
    PixelRect r;
    r.row0 = static_cast<int>(static_cast<long long>(cell.iy) * height / n);
    r.row1 = static_cast<int>(static_cast<long long>(cell.iy + 1) * height / n);
    r.col0 = static_cast<int>(static_cast<long long>(cell.ix) * width / n);
    r.col1 = static_cast<int>(static_cast<long long>(cell.ix + 1) * width / n);
    return r;
}

WeightMap assemble_weight(const DyadicPartition& partition,
                          const std::map<DyadicCell, double>& per_cell_values,
                          int height, int width) {
    if (!is_tiling(partition)) throw std::invalid_argument("assemble_weight: partition does not tile");
    WeightMap w(height, width, 1.0);
    for (const DyadicCell& c : partition.cells) {
        auto it = per_cell_values.find(c);
        if (it == per_cell_values.end())
            throw std::invalid_argument("assemble_weight: missing value for a cell");
        if (!(it->second > 0.0) || !std::isfinite(it->second))
            throw std::domain_error("assemble_weight: cell value must be strictly positive");
        const PixelRect r = pixel_range(c, height, width);
        for (int i = r.row0; i < r.row1; ++i)
            for (int j = r.col0; j < r.col1; ++j)
                w.values[static_cast<size_t>(i) * width + j] = it->second;
    }
    return w;
}

namespace {

// Exact O(N^2) envelope; pixel centers mapped to the unit square.
WeightMap envelope_exact(const WeightMap& w, double k) {
    const int H = w.height, W = w.width;
    WeightMap out = w;
    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            double best = w.values[static_cast<size_t>(i) * W + j];
            for (int a = 0; a < H; ++a) {
                const double dy = static_cast<double>(a - i) / H;
                for (int b = 0; b < W; ++b) {
                    const double dx = static_cast<double>(b - j) / W;
                    const double cand = w.values[static_cast<size_t>(a) * W + b] + k * std::sqrt(dx * dx + dy * dy);
                    if (cand < best) best = cand;
                }
            }
            out.values[static_cast<size_t>(i) * W + j] = best;
        }
    }
    return out;
}

// Two-pass chamfer propagation with primitive displacements up to radius 4;
// the induced path metric exceeds the Euclidean distance by < 0.8%.
WeightMap envelope_chamfer(const WeightMap& w, double k) {
    const int H = w.height, W = w.width;
    struct Step { int di, dj; double cost; };
    std::vector<Step> half;
    for (int di = -4; di <= 4; ++di) {
        for (int dj = -4; dj <= 4; ++dj) {
            if (di == 0 && dj == 0) continue;
            if (std::gcd(std::abs(di), std::abs(dj)) != 1) continue;
            // forward half-plane: earlier rows, or same row earlier cols
            if (di > 0 || (di == 0 && dj > 0)) continue;
            const double dy = static_cast<double>(di) / H;
            const double dx = static_cast<double>(dj) / W;
            half.push_back(Step{di, dj, k * std::sqrt(dx * dx + dy * dy)});
        }
    }
    WeightMap out = w;
    auto relax = [&](int i, int j, int di, int dj, double cost) {
        const int a = i + di, b = j + dj;
        if (a < 0 || a >= H || b < 0 || b >= W) return;
        const double cand = out.values[static_cast<size_t>(a) * W + b] + cost;
        double& cur = out.values[static_cast<size_t>(i) * W + j];
        if (cand < cur) cur = cand;
    };
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (const Step& s : half) relax(i, j, s.di, s.dj, s.cost);
    for (int i = H - 1; i >= 0; --i)
        for (int j = W - 1; j >= 0; --j)
            for (const Step& s : half) relax(i, j, -s.di, -s.dj, s.cost);
    return out;
}

}  // namespace

WeightMap mollify_lipschitz(const WeightMap& w, double k) {
    validate_weight(w);
    if (!(k > 0.0)) throw std::invalid_argument("mollify_lipschitz: k must be > 0");
    if (static_cast<long long>(w.height) * w.width <= 128 * 128) return envelope_exact(w, k);
    return envelope_chamfer(w, k);
}

}  // namespace adaptv
