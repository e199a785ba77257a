#pragma once

#include <utility>
#include <vector>

#include "adaptv/grid.hpp"
#include "adaptv/regularizer.hpp"
#include "adaptv/solve_tv.hpp"

namespace adaptv {

/// Closed-form minimizer of (u1-a)^2 + (u2-b)^2 + alpha*|u2-u1|.
/// If |b-a| <= alpha both pixels collapse to the common mean; otherwise the
/// difference shrinks by exactly alpha and the mean is preserved.
std::pair<double, double> two_pixel_rof(double a, double b, double alpha);

/// Exact minimizer of  sum (u_i - y_i)^2 + alpha * sum |u_{i+1} - u_i|
/// computed by the dynamic-programming form of the taut-string method.
std::vector<double> taut_string_1d(const std::vector<double>& signal, double alpha);

/// Central finite difference of the training loss L(lambda) = l2_loss(u_hat, clean)
/// computed with fully converged inner solves; the anti-hallucination oracle
/// for the piggyback hypergradient.
double fd_hypergradient(const ImageGrid& clean, const ImageGrid& noisy, double lambda,
                        double h, const RegularizerSpec& reg, const SolverConfig& cfg,
                        bool* warned = nullptr);

struct GridSearchResult {
    double lambda_best = 0.0;
    std::vector<std::pair<double, double>> cost_curve;  // (lambda, cost)
};

/// Brute-force sweep of the per-cell training cost ||clean - u_lambda||^2 over
/// a lambda grid; ties broken toward the smaller lambda.
GridSearchResult lambda_grid_search(const ImageGrid& clean, const ImageGrid& noisy,
                                    const RegularizerSpec& reg, const std::vector<double>& grid,
                                    const SolverConfig& cfg);

/// Log-spaced grid with n points covering [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace adaptv
