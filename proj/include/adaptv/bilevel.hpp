#pragma once

#include <string>
#include <vector>

#include "adaptv/partition.hpp"
#include "adaptv/regularizer.hpp"
#include "adaptv/solve_tgv.hpp"
#include "adaptv/solve_tv.hpp"

namespace adaptv {

struct TrainingPair {
    ImageGrid clean;
    ImageGrid noisy;

    TrainingPair() = default;
    TrainingPair(ImageGrid c, ImageGrid n) : clean(std::move(c)), noisy(std::move(n)) {
        if (!clean.same_dims(noisy)) throw std::invalid_argument("TrainingPair: dimension mismatch");
    }
};

/// Where the loss gradient enters the adjoint recursion. `primal` injects it
/// in the primal adjoint update and is the variant validated against finite
/// differences; `dual` injects it inside the dual adjoint drive.
enum class AdjointInjection { primal, dual };

struct BilevelConfig {
    double lambda0 = 1.0;
    double zeta = 1.0;     // initial step size
    double nu = 0.9;       // damping factor, in (0,1]
    double tol = 1e-4;     // stop when |lambda_k - lambda_{k-1}| <= tol
    int max_outer = 50;
    BoxConstraint box;
    bool log_space = false;      // take the descent step in log(lambda)
    double max_log_step = 1.386;  // per-step cap on |delta log(lambda)| in log-space mode; 0 = uncapped
    AdjointInjection injection = AdjointInjection::primal;
    bool verbose = false;  // emit one JSON line per outer iteration to stderr

    void validate() const;
};

/// Adjoint iterates mirroring the solver state (X tracks the primal, Y the
/// dual), plus the extrapolated combination used by both updates.
struct AdjointState {
    ImageGrid X;
    VectorField2 Y;
    ImageGrid X_bar;
};

struct PiggybackResult {
    ImageGrid u_hat;
    ImageGrid adjoint_u;  // U_hat, scaled so that grad = lambda * sum U_hat*(u_hat - noisy)
    double loss = 0.0;    // (1/2)||u_hat - clean||^2
    double grad = 0.0;    // d loss / d lambda
    SolveDiagnostics diagnostics;
    bool adjoint_diverged = false;
};

/// Runs PDHG on the lambda-weighted denoising problem with the adjoint
/// iterates evolved in lockstep, and differentiates the training loss with
/// respect to the scalar fidelity weight lambda.
PiggybackResult piggyback_solve(const TrainingPair& pair, double lambda,
                                const RegularizerSpec& reg, const SolverConfig& cfg,
                                AdjointInjection injection = AdjointInjection::primal);

struct OuterTracePoint {
    int k = 0;
    double lambda = 0.0;
    double loss = 0.0;
    double grad = 0.0;
};

struct OptimizeResult {
    double lambda_star = 0.0;
    double cost = 0.0;  // ||clean - u_{lambda*}||^2
    std::vector<OuterTracePoint> trace;
    std::vector<std::string> warnings;
};

/// Damped gradient descent on lambda with box clamping.
OptimizeResult optimize_lambda(const TrainingPair& pair, const RegularizerSpec& reg,
                               const BilevelConfig& bcfg, const SolverConfig& cfg);

}  // namespace adaptv
