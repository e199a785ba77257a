#include "adaptv/grid.hpp"

#include <cmath>

namespace adaptv {

void validate_weight(const WeightMap& w) {
    if (w.height < 1 || w.width < 1 || w.values.size() != static_cast<size_t>(w.height) * w.width)
        throw std::invalid_argument("WeightMap: inconsistent dimensions");
    for (double v : w.values) {
        if (!std::isfinite(v)) throw std::domain_error("WeightMap: non-finite value");
        if (!(v > 0.0)) throw std::domain_error("WeightMap: values must be strictly positive");
    }
}

double mean_value(const ImageGrid& u) {
    if (u.values.empty()) throw std::invalid_argument("mean_value: empty image");
    double s = 0.0;
    for (double v : u.values) s += v;
    return s / static_cast<double>(u.values.size());
}

ImageGrid extract(const ImageGrid& u, const PixelRect& r) {
    if (r.empty()) throw std::invalid_argument("extract: empty rectangle");
    if (r.row0 < 0 || r.col0 < 0 || r.row1 > u.height || r.col1 > u.width)
        throw std::invalid_argument("extract: rectangle out of bounds");
    ImageGrid out(r.rows(), r.cols());
    for (int i = 0; i < out.height; ++i)
        for (int j = 0; j < out.width; ++j)
            out.at(i, j) = u.at(r.row0 + i, r.col0 + j);
    return out;
}

void insert(ImageGrid& dst, const ImageGrid& src, const PixelRect& r) {
    if (src.height != r.rows() || src.width != r.cols())
        throw std::invalid_argument("insert: dimensions do not match rectangle");
    if (r.row0 < 0 || r.col0 < 0 || r.row1 > dst.height || r.col1 > dst.width)
        throw std::invalid_argument("insert: rectangle out of bounds");
    for (int i = 0; i < src.height; ++i)
        for (int j = 0; j < src.width; ++j)
            dst.at(r.row0 + i, r.col0 + j) = src.at(i, j);
}

}  // namespace adaptv
