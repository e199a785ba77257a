#pragma once

#include <optional>
#include <utility>

#include "adaptv/solve_tv.hpp"

namespace adaptv {

/// Second-order TGV denoising problem:
///   min_{u,v}  sum lam*(u-noisy)^2 + alpha0*sum|grad u - v| + alpha1*sum|sym_grad v|
/// with the weighted Frobenius norm on the tensor part. Per-pixel alpha maps
/// are experimental; the scheme only drives the fidelity weight spatially.
struct TGVProblem {
    ImageGrid noisy;
    double alpha0 = 1.0;
    double alpha1 = 1.0;
    WeightMap fid_weight;
    std::optional<WeightMap> alpha0_map;  // experimental
    std::optional<WeightMap> alpha1_map;  // experimental

    static TGVProblem scalar(ImageGrid noisy, double alpha0, double alpha1, double lam = 1.0);
    static TGVProblem fid_weighted(ImageGrid noisy, double alpha0, double alpha1, WeightMap fid_weight);
    void validate() const;
};

/// Primal (u,v), dual (p,q) and extrapolated iterates.
struct TGVState {
    ImageGrid u;
    VectorField2 v;
    VectorField2 p;
    SymTensorField q;
    ImageGrid u_bar;
    VectorField2 v_bar;
    int iter = 0;
    double residual = 0.0;
};

/// Per-pixel projection of p onto the disc of radius alpha0 and of q onto the
/// ball of radius alpha1 in the tensor norm sqrt(c11^2 + 2*c12^2 + c22^2).
std::pair<VectorField2, SymTensorField> project_dual_tgv(const VectorField2& p,
                                                         const SymTensorField& q,
                                                         double alpha0, double alpha1);

struct TGVResult {
    ImageGrid u;
    VectorField2 v;
    SolveDiagnostics diagnostics;
};

TGVResult solve_tgv(const TGVProblem& problem, const SolverConfig& cfg);

/// Primal energy at a given v (an upper bound for the infimum over v).
double energy_tgv(const ImageGrid& u, const VectorField2& v, const TGVProblem& problem);

}  // namespace adaptv
