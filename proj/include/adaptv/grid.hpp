#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace adaptv {

/// Dense 2-D scalar field, row-major. Intensities are nominally in [0,1]
/// but intermediates are unconstrained.
struct ImageGrid {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    ImageGrid() = default;
    ImageGrid(int h, int w, double fill = 0.0)
        : height(h), width(w), values(static_cast<size_t>(h) * static_cast<size_t>(w), fill) {
        if (h < 1 || w < 1) throw std::invalid_argument("ImageGrid: dims must be >= 1");
    }

    size_t size() const { return values.size(); }
    double& at(int i, int j) { return values[static_cast<size_t>(i) * width + j]; }
    double at(int i, int j) const { return values[static_cast<size_t>(i) * width + j]; }
    bool same_dims(const ImageGrid& o) const { return height == o.height && width == o.width; }
};

/// Two-component vector field with the same layout as ImageGrid.
struct VectorField2 {
    int height = 0;
    int width = 0;
    std::vector<double> comp1;  // x-component
    std::vector<double> comp2;  // y-component

    VectorField2() = default;
    VectorField2(int h, int w)
        : height(h), width(w),
          comp1(static_cast<size_t>(h) * static_cast<size_t>(w), 0.0),
          comp2(static_cast<size_t>(h) * static_cast<size_t>(w), 0.0) {
        if (h < 1 || w < 1) throw std::invalid_argument("VectorField2: dims must be >= 1");
    }

    size_t size() const { return comp1.size(); }
};

/// Symmetric 2x2 tensor per pixel; the off-diagonal entry is stored once and
/// counts twice in inner products and norms.
struct SymTensorField {
    int height = 0;
    int width = 0;
    std::vector<double> c11;
    std::vector<double> c12;
    std::vector<double> c22;

    SymTensorField() = default;
    SymTensorField(int h, int w)
        : height(h), width(w),
          c11(static_cast<size_t>(h) * static_cast<size_t>(w), 0.0),
          c12(static_cast<size_t>(h) * static_cast<size_t>(w), 0.0),
          c22(static_cast<size_t>(h) * static_cast<size_t>(w), 0.0) {
        if (h < 1 || w < 1) throw std::invalid_argument("SymTensorField: dims must be >= 1");
    }

    size_t size() const { return c11.size(); }
};

/// Per-pixel strictly positive field (regularizer radii or fidelity weights).
struct WeightMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    WeightMap() = default;
    WeightMap(int h, int w, double fill)
        : height(h), width(w), values(static_cast<size_t>(h) * static_cast<size_t>(w), fill) {
        if (h < 1 || w < 1) throw std::invalid_argument("WeightMap: dims must be >= 1");
        if (!(fill > 0.0)) throw std::domain_error("WeightMap: values must be strictly positive");
    }

    size_t size() const { return values.size(); }
    double at(int i, int j) const { return values[static_cast<size_t>(i) * width + j]; }
    bool same_dims(const ImageGrid& o) const { return height == o.height && width == o.width; }
};

/// Throws unless every entry of w is finite and strictly positive.
void validate_weight(const WeightMap& w);

inline double dot(const ImageGrid& a, const ImageGrid& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s;
}

inline double dot(const VectorField2& a, const VectorField2& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.comp1.size(); ++i) s += a.comp1[i] * b.comp1[i] + a.comp2[i] * b.comp2[i];
    return s;
}

/// Tensor inner product; c12 is weighted by 2 (it represents both
/// off-diagonal entries of the symmetric matrix).
inline double dot(const SymTensorField& a, const SymTensorField& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.c11.size(); ++i)
        s += a.c11[i] * b.c11[i] + 2.0 * a.c12[i] * b.c12[i] + a.c22[i] * b.c22[i];
    return s;
}

inline double norm2(const ImageGrid& a) { return std::sqrt(dot(a, a)); }
inline double norm2(const VectorField2& a) { return std::sqrt(dot(a, a)); }
inline double norm2(const SymTensorField& a) { return std::sqrt(dot(a, a)); }

double mean_value(const ImageGrid& u);

/// Half-open pixel rectangle [row0,row1) x [col0,col1).
struct PixelRect {
    int row0 = 0, row1 = 0, col0 = 0, col1 = 0;
    int rows() const { return row1 - row0; }
    int cols() const { return col1 - col0; }
    bool empty() const { return rows() <= 0 || cols() <= 0; }
    long long area() const { return empty() ? 0 : static_cast<long long>(rows()) * cols(); }
};

ImageGrid extract(const ImageGrid& u, const PixelRect& r);
void insert(ImageGrid& dst, const ImageGrid& src, const PixelRect& r);

}  // namespace adaptv
