#pragma once

#include "adaptv/grid.hpp"

namespace adaptv {

/// Forward-difference gradient, zero (Neumann) in the last column/row:
///   comp1[i,j] = u[i,j+1] - u[i,j]  for j < W-1, else 0
///   comp2[i,j] = u[i+1,j] - u[i,j]  for i < H-1, else 0
VectorField2 grad(const ImageGrid& u);

/// Negative adjoint of grad: <grad u, p> + <u, div p> = 0 exactly.
ImageGrid div(const VectorField2& p);

/// Symmetrized gradient of a vector field. Forward differences, Neumann
/// boundary. comp1 carries a padding column (grad leaves comp1[:,W-1] = 0)
/// and comp2 a padding row, so the diagonal entries stop one cell earlier:
///   c11[i,j] = v1[i,j+1] - v1[i,j]  for j < W-2, else 0
///   c22[i,j] = v2[i+1,j] - v2[i,j]  for i < H-2, else 0
///   c12[i,j] = (v1[i+1,j]-v1[i,j] + v2[i,j+1]-v2[i,j])/2  for i < H-1 and j < W-1, else 0
/// With this convention sym_grad(grad(a + b*x + c*y)) vanishes identically,
/// so sampled affine images have zero second-order energy.
SymTensorField sym_grad(const VectorField2& v);

/// Negative adjoint of sym_grad under the tensor inner product that counts
/// c12 twice: <sym_grad v, q> + <v, div2 q> = 0 exactly.
VectorField2 div2(const SymTensorField& q);

enum class OperatorKind { tv, tgv };

/// Analytic spectral-norm bounds for the discrete operators:
/// sqrt(8) for the gradient, sqrt((17+sqrt(33))/2) for the TGV block operator.
double op_norm_bound(OperatorKind op);

/// Power iteration on K*K. The Rayleigh-quotient estimate never exceeds the
/// analytic bound. iterations must be >= 100.
double op_norm_estimate(OperatorKind op, int height, int width, int iterations = 200);

}  // namespace adaptv
