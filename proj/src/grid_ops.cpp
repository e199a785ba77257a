#include "adaptv/grid_ops.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace adaptv {

VectorField2 grad(const ImageGrid& u) {
    const int H = u.height, W = u.width;
    VectorField2 g(H, W);
    for (int i = 0; i < H; ++i) {
        const size_t row = static_cast<size_t>(i) * W;
        for (int j = 0; j < W - 1; ++j)
            g.comp1[row + j] = u.values[row + j + 1] - u.values[row + j];
    }
    for (int i = 0; i < H - 1; ++i) {
        const size_t row = static_cast<size_t>(i) * W;
        for (int j = 0; j < W; ++j)
            g.comp2[row + j] = u.values[row + W + j] - u.values[row + j];
    }
    return g;
}

ImageGrid div(const VectorField2& p) {
    const int H = p.height, W = p.width;
    ImageGrid d(H, W);
    for (int i = 0; i < H; ++i) {
        const size_t row = static_cast<size_t>(i) * W;
        for (int j = 0; j < W; ++j) {
            double s = 0.0;
            if (j < W - 1) s += p.comp1[row + j];
            if (j > 0) s -= p.comp1[row + j - 1];
            if (i < H - 1) s += p.comp2[row + j];
            if (i > 0) s -= p.comp2[row - W + j];
            d.values[row + j] = s;
        }
    }
    return d;
}

SymTensorField sym_grad(const VectorField2& v) {
    const int H = v.height, W = v.width;
    SymTensorField e(H, W);
    for (int i = 0; i < H; ++i) {
        const size_t row = static_cast<size_t>(i) * W;
        for (int j = 0; j + 2 < W; ++j)
            e.c11[row + j] = v.comp1[row + j + 1] - v.comp1[row + j];
    }
    for (int i = 0; i + 2 < H; ++i) {
        const size_t row = static_cast<size_t>(i) * W;
        for (int j = 0; j < W; ++j)
            e.c22[row + j] = v.comp2[row + W + j] - v.comp2[row + j];
    }
    for (int i = 0; i < H - 1; ++i) {
        const size_t row = static_cast<size_t>(i) * W;
        for (int j = 0; j < W - 1; ++j) {
            const double d2v1 = v.comp1[row + W + j] - v.comp1[row + j];
            const double d1v2 = v.comp2[row + j + 1] - v.comp2[row + j];
            e.c12[row + j] = 0.5 * (d2v1 + d1v2);
        }
    }
    return e;
}

VectorField2 div2(const SymTensorField& q) {
    const int H = q.height, W = q.width;
    VectorField2 d(H, W);
    // comp1 pairs with v1 degrees of freedom (j < W-1), comp2 with v2 (i < H-1).
    for (int i = 0; i < H; ++i) {
        const size_t row = static_cast<size_t>(i) * W;
        for (int j = 0; j < W - 1; ++j) {
            double s = 0.0;
            if (j + 2 < W) s += q.c11[row + j];
            if (j > 0) s -= q.c11[row + j - 1];
            if (i < H - 1) s += q.c12[row + j];
            if (i > 0) s -= q.c12[row - W + j];
            d.comp1[row + j] = s;
        }
    }
    for (int i = 0; i < H - 1; ++i) {
        const size_t row = static_cast<size_t>(i) * W;
        for (int j = 0; j < W; ++j) {
            double s = 0.0;
            if (i + 2 < H) s += q.c22[row + j];
            if (i > 0) s -= q.c22[row - W + j];
            if (j < W - 1) s += q.c12[row + j];
            if (j > 0) s -= q.c12[row + j - 1];
            d.comp2[row + j] = s;
        }
    }
    return d;
}

double op_norm_bound(OperatorKind op) {
    if (op == OperatorKind::tv) return std::sqrt(8.0);
    return std::sqrt((17.0 + std::sqrt(33.0)) / 2.0);
}

namespace {

// Deterministic pseudo-random doubles in (-1,1) for the power-iteration seed.
double seed_value(uint64_t k) {
    uint64_t z = (k + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace

double op_norm_estimate(OperatorKind op, int height, int width, int iterations) {
    if (height < 1 || width < 1 || static_cast<long long>(height) * width < 2)
        throw std::invalid_argument("op_norm_estimate: need at least two pixels");
    if (iterations < 100) throw std::invalid_argument("op_norm_estimate: iterations must be >= 100");

    if (op == OperatorKind::tv) {
        ImageGrid u(height, width);
        for (size_t k = 0; k < u.values.size(); ++k) u.values[k] = seed_value(k);
        double rayleigh = 0.0;
        for (int it = 0; it < iterations; ++it) {
            const double n = norm2(u);
            if (n == 0.0) return 0.0;
            for (double& v : u.values) v /= n;
            VectorField2 g = grad(u);
            ImageGrid au = div(g);
            for (double& v : au.values) v = -v;  // K*K u = -div(grad u)
            rayleigh = dot(u, au);
            u = std::move(au);
        }
        return std::sqrt(std::max(0.0, rayleigh));
    }

    // TGV block operator K(u,v) = (grad u - v, sym_grad v).
    ImageGrid u(height, width);
    VectorField2 v(height, width);
    for (size_t k = 0; k < u.values.size(); ++k) {
        u.values[k] = seed_value(3 * k);
        v.comp1[k] = seed_value(3 * k + 1);
        v.comp2[k] = seed_value(3 * k + 2);
    }
    double rayleigh = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const double n = std::sqrt(dot(u, u) + dot(v, v));
        if (n == 0.0) return 0.0;
        for (double& x : u.values) x /= n;
        for (double& x : v.comp1) x /= n;
        for (double& x : v.comp2) x /= n;

        VectorField2 p = grad(u);
        for (size_t k = 0; k < p.comp1.size(); ++k) {
            p.comp1[k] -= v.comp1[k];
            p.comp2[k] -= v.comp2[k];
        }
        SymTensorField q = sym_grad(v);

        // K*(p,q) = (-div p, -p - div2 q)
        ImageGrid au = div(p);
        for (double& x : au.values) x = -x;
        VectorField2 av = div2(q);
        for (size_t k = 0; k < av.comp1.size(); ++k) {
            av.comp1[k] = -p.comp1[k] - av.comp1[k];
            av.comp2[k] = -p.comp2[k] - av.comp2[k];
        }
        rayleigh = dot(u, au) + dot(v, av);
        u = std::move(au);
        v = std::move(av);
    }
    return std::sqrt(std::max(0.0, rayleigh));
}

}  // namespace adaptv
