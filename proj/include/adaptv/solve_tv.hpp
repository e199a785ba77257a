#pragma once

#include <optional>
#include <string>

#include "adaptv/grid.hpp"
#include "adaptv/grid_ops.hpp"

namespace adaptv {

/// PDHG step sizes and stopping parameters. The step-size condition is
/// enforced as tau*sigma*norm_bound^2 <= 1 with norm_bound an upper bound on
/// the operator norm of K.
struct SolverConfig {
    double tau = 0.0;
    double sigma = 0.0;
    double theta = 1.0;
    int max_iter = 2000;
    double tol = 1e-6;
    double norm_bound = 0.0;

    static SolverConfig defaults(OperatorKind op);
    void validate() const;
};

struct SolveDiagnostics {
    int iterations = 0;
    double residual = 0.0;  // relative primal change over a 10-iteration window
    double energy = 0.0;    // discrete primal energy at the returned iterate
    bool converged = false;
    std::string warning;    // non-empty when convergence was not reached
};

enum class TVMode { scalar, reg_weighted, fid_weighted };

/// Weighted ROF problem: sum lam*(u-noisy)^2 + sum radii*|grad u|.
/// Exactly one of the two maps is non-uniform:
///  - reg-weighted mode: per-pixel dual radii, unweighted fidelity (lam = 1);
///  - fid-weighted mode: per-pixel lam, unit radii.
/// Scalar mode is a uniform radii map.
struct TVProblem {
    ImageGrid noisy;
    WeightMap radii;
    WeightMap lam;
    TVMode mode = TVMode::scalar;

    static TVProblem scalar(ImageGrid noisy, double alpha);
    static TVProblem reg_weighted(ImageGrid noisy, WeightMap reg_weight);
    static TVProblem fid_weighted(ImageGrid noisy, WeightMap fid_weight);
    void validate() const;
};

/// Primal/dual/extrapolated iterates of the PDHG loop.
struct SolverState {
    ImageGrid x;
    VectorField2 y;
    ImageGrid x_bar;
    int iter = 0;
    double residual = 0.0;
};

/// Per-pixel Euclidean projection onto the disc of radius radii[i,j].
VectorField2 project_dual_tv(const VectorField2& p, const WeightMap& radii);

/// Resolvent of the weighted fidelity tau*lam*(u-noisy)^2:
/// (v + 2*tau*lam*noisy) / (1 + 2*tau*lam), pointwise.
ImageGrid prox_fidelity(const ImageGrid& v, const WeightMap& lam, const ImageGrid& noisy, double tau);

struct TVResult {
    ImageGrid u;
    SolveDiagnostics diagnostics;
};

TVResult solve_tv(const TVProblem& problem, const SolverConfig& cfg);

/// Discrete primal energy  sum lam*(u-noisy)^2 + sum radii*|grad u|  (isotropic).
double energy_tv(const ImageGrid& u, const TVProblem& problem);

}  // namespace adaptv
