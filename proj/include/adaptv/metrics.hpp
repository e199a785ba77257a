#pragma once

#include "adaptv/grid.hpp"

namespace adaptv {

/// Half the squared l2 distance, (1/2) sum (a-b)^2.
double l2_loss(const ImageGrid& a, const ImageGrid& b);

/// 10*log10(peak^2 / MSE); +infinity for identical images.
double psnr(const ImageGrid& a, const ImageGrid& b, double peak = 1.0);

/// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), C1=(0.01*peak)^2,
/// C2=(0.03*peak)^2, symmetric boundary extension, mean over all pixels.
double ssim(const ImageGrid& a, const ImageGrid& b, double peak = 1.0);

/// Least-squares projection onto affine functions a + b*x + c*y on the pixel
/// grid. Idempotent; the residual is orthogonal to {1, x, y}.
ImageGrid affine_project(const ImageGrid& u);

/// Weighted isotropic total variation  sum w*|grad u|.
double tv_value(const ImageGrid& u, const WeightMap& w);

/// alpha0*sum|grad u - v| + alpha1*sum|sym_grad v| (weighted tensor norm).
double tgv_value(const ImageGrid& u, const VectorField2& v, double alpha0, double alpha1);

}  // namespace adaptv
