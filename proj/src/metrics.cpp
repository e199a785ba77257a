#include "adaptv/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "adaptv/grid_ops.hpp"

namespace adaptv {

double l2_loss(const ImageGrid& a, const ImageGrid& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("l2_loss: dimension mismatch");
    double s = 0.0;
    for (size_t k = 0; k < a.values.size(); ++k) {
        const double d = a.values[k] - b.values[k];
        s += d * d;
    }
    return 0.5 * s;
}

double psnr(const ImageGrid& a, const ImageGrid& b, double peak) {
    if (!a.same_dims(b)) throw std::invalid_argument("psnr: dimension mismatch");
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be > 0");
    double mse = 0.0;
    for (size_t k = 0; k < a.values.size(); ++k) {
        const double d = a.values[k] - b.values[k];
        mse += d * d;
    }
    mse /= static_cast<double>(a.values.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kSsimRadius = 5;  // 11x11 window
constexpr double kSsimSigma = 1.5;

// Symmetric (edge-inclusive reflect) index: ..., 1, 0 | 0, 1, ..., n-1 | n-1, n-2, ...
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

// Gaussian-weighted local mean with symmetric boundary, separable passes.
std::vector<double> gaussian_blur(const std::vector<double>& src, int H, int W) {
    std::vector<double> kernel(2 * kSsimRadius + 1);
    double ksum = 0.0;
    for (int t = -kSsimRadius; t <= kSsimRadius; ++t) {
        kernel[t + kSsimRadius] = std::exp(-0.5 * t * t / (kSsimSigma * kSsimSigma));
        ksum += kernel[t + kSsimRadius];
    }
    for (double& v : kernel) v /= ksum;

    std::vector<double> tmp(src.size()), out(src.size());
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            double s = 0.0;
            for (int t = -kSsimRadius; t <= kSsimRadius; ++t)
                s += kernel[t + kSsimRadius] * src[static_cast<size_t>(i) * W + reflect_index(j + t, W)];
            tmp[static_cast<size_t>(i) * W + j] = s;
        }
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            double s = 0.0;
            for (int t = -kSsimRadius; t <= kSsimRadius; ++t)
                s += kernel[t + kSsimRadius] * tmp[static_cast<size_t>(reflect_index(i + t, H)) * W + j];
            out[static_cast<size_t>(i) * W + j] = s;
        }
    return out;
}

}  // namespace

double ssim(const ImageGrid& a, const ImageGrid& b, double peak) {
    if (!a.same_dims(b)) throw std::invalid_argument("ssim: dimension mismatch");
    const int H = a.height, W = a.width;
    if (H < 2 * kSsimRadius + 1 || W < 2 * kSsimRadius + 1)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);

    std::vector<double> aa(a.values.size()), bb(a.values.size()), ab(a.values.size());
    for (size_t k = 0; k < a.values.size(); ++k) {
        aa[k] = a.values[k] * a.values[k];
        bb[k] = b.values[k] * b.values[k];
        ab[k] = a.values[k] * b.values[k];
    }
    const auto mu_a = gaussian_blur(a.values, H, W);
    const auto mu_b = gaussian_blur(b.values, H, W);
    const auto m_aa = gaussian_blur(aa, H, W);
    const auto m_bb = gaussian_blur(bb, H, W);
    const auto m_ab = gaussian_blur(ab, H, W);

    double acc = 0.0;
    for (size_t k = 0; k < a.values.size(); ++k) {
        const double va = m_aa[k] - mu_a[k] * mu_a[k];
        const double vb = m_bb[k] - mu_b[k] * mu_b[k];
        const double cov = m_ab[k] - mu_a[k] * mu_b[k];
        const double num = (2.0 * mu_a[k] * mu_b[k] + c1) * (2.0 * cov + c2);
        const double den = (mu_a[k] * mu_a[k] + mu_b[k] * mu_b[k] + c1) * (va + vb + c2);
        acc += num / den;
    }
    return acc / static_cast<double>(a.values.size());
}

ImageGrid affine_project(const ImageGrid& u) {
    const int H = u.height, W = u.width;
    // Centered coordinates make the normal equations diagonal on a full grid.
    const double cx = 0.5 * (W - 1), cy = 0.5 * (H - 1);
    double sx2 = 0.0, sy2 = 0.0, sux = 0.0, suy = 0.0, su = 0.0;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            const double x = j - cx, y = i - cy;
            const double v = u.at(i, j);
            su += v;
            sux += v * x;
            suy += v * y;
            sx2 += x * x;
            sy2 += y * y;
        }
    const double a = su / (static_cast<double>(H) * W);
    const double bx = sx2 > 0.0 ? sux / sx2 : 0.0;
    const double by = sy2 > 0.0 ? suy / sy2 : 0.0;
    ImageGrid out(H, W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            out.at(i, j) = a + bx * (j - cx) + by * (i - cy);
    return out;
}

double tv_value(const ImageGrid& u, const WeightMap& w) {
    if (!w.same_dims(u)) throw std::invalid_argument("tv_value: dimension mismatch");
    const VectorField2 g = grad(u);
    double s = 0.0;
    for (size_t k = 0; k < g.comp1.size(); ++k)
        s += w.values[k] * std::sqrt(g.comp1[k] * g.comp1[k] + g.comp2[k] * g.comp2[k]);
    return s;
}

double tgv_value(const ImageGrid& u, const VectorField2& v, double alpha0, double alpha1) {
    if (v.height != u.height || v.width != u.width) throw std::invalid_argument("tgv_value: dimension mismatch");
    const VectorField2 g = grad(u);
    double first = 0.0;
    for (size_t k = 0; k < g.comp1.size(); ++k) {
        const double d1 = g.comp1[k] - v.comp1[k];
        const double d2 = g.comp2[k] - v.comp2[k];
        first += std::sqrt(d1 * d1 + d2 * d2);
    }
    const SymTensorField e = sym_grad(v);
    double second = 0.0;
    for (size_t k = 0; k < e.c11.size(); ++k)
        second += std::sqrt(e.c11[k] * e.c11[k] + 2.0 * e.c12[k] * e.c12[k] + e.c22[k] * e.c22[k]);
    return alpha0 * first + alpha1 * second;
}

}  // namespace adaptv
