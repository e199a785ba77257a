#include "adaptv/validation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "adaptv/metrics.hpp"
#include "adaptv/solve_tgv.hpp"

namespace adaptv {

std::pair<double, double> two_pixel_rof(double a, double b, double alpha) {
    if (alpha < 0.0) throw std::domain_error("two_pixel_rof: alpha must be >= 0");
    const double diff = b - a;
    if (std::abs(diff) <= alpha) {
        const double m = 0.5 * (a + b);
        return {m, m};
    }
    const double shrink = 0.5 * alpha * (diff > 0 ? 1.0 : -1.0);
    return {a + shrink, b - shrink};
}

std::vector<double> taut_string_1d(const std::vector<double>& y, double alpha) {
    if (alpha < 0.0) throw std::domain_error("taut_string_1d: alpha must be >= 0");
    const int n = static_cast<int>(y.size());
    if (n == 0) throw std::invalid_argument("taut_string_1d: empty signal");
    if (n == 1 || alpha == 0.0) return y;

    // Fidelity here is (u-y)^2, so the classical half-quadratic recursion runs
    // with lam = alpha/2.
    const double lam = 0.5 * alpha;

    std::vector<double> x(2 * n), a(2 * n), b(2 * n), tm(n - 1), tp(n - 1);
    std::vector<double> out(n);

    tm[0] = y[0] - lam;
    tp[0] = y[0] + lam;
    int l = n - 1;
    int r = n;
    x[l] = tm[0];
    x[r] = tp[0];
    a[l] = 1.0;
    b[l] = -y[0] + lam;
    a[r] = -1.0;
    b[r] = y[0] + lam;
    double afirst = 1.0, bfirst = -y[1] - lam;
    double alast = -1.0, blast = y[1] - lam;

    for (int k = 1; k < n - 1; ++k) {
        double alo = afirst, blo = bfirst;
        int lo = l;
        for (; lo <= r; ++lo) {
            if (alo * x[lo] + blo > -lam) break;
            alo += a[lo];
            blo += b[lo];
        }
        double ahi = alast, bhi = blast;
        int hi = r;
        for (; hi >= lo; --hi) {
            if (-ahi * x[hi] - bhi < lam) break;
            ahi += a[hi];
            bhi += b[hi];
        }
        tm[k] = (-lam - blo) / alo;
        l = lo - 1;
        x[l] = tm[k];
        tp[k] = (lam + bhi) / (-ahi);
        r = hi + 1;
        x[r] = tp[k];
        a[l] = alo;
        b[l] = blo + lam;
        a[r] = ahi;
        b[r] = bhi + lam;
        afirst = 1.0;
        bfirst = -y[k + 1] - lam;
        alast = -1.0;
        blast = y[k + 1] - lam;
    }

    double alo = afirst, blo = bfirst;
    int lo = l;
    for (; lo <= r; ++lo) {
        if (alo * x[lo] + blo > 0.0) break;
        alo += a[lo];
        blo += b[lo];
    }
    out[n - 1] = -blo / alo;
    for (int k = n - 2; k >= 0; --k) {
        if (out[k + 1] > tp[k])
            out[k] = tp[k];
        else if (out[k + 1] < tm[k])
            out[k] = tm[k];
        else
            out[k] = out[k + 1];
    }
    return out;
}

namespace {

ImageGrid solve_at_lambda(const ImageGrid& noisy, double lambda, const RegularizerSpec& reg,
                          const SolverConfig& cfg, bool* warned) {
    if (reg.kind == RegularizerSpec::Kind::tv) {
        TVProblem prob = TVProblem::scalar(noisy, 1.0);
        prob.lam = WeightMap(noisy.height, noisy.width, lambda);
        prob.mode = TVMode::fid_weighted;
        TVResult res = solve_tv(prob, cfg);
        if (warned && !res.diagnostics.converged) *warned = true;
        return res.u;
    }
    TGVProblem prob = TGVProblem::scalar(noisy, reg.alpha0, reg.alpha1, lambda);
    TGVResult res = solve_tgv(prob, cfg);
    if (warned && !res.diagnostics.converged) *warned = true;
    return res.u;
}

}  // namespace

double fd_hypergradient(const ImageGrid& clean, const ImageGrid& noisy, double lambda,
                        double h, const RegularizerSpec& reg, const SolverConfig& cfg,
                        bool* warned) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_hypergradient: h must be > 0");
    if (!(lambda - h > 0.0)) throw std::invalid_argument("fd_hypergradient: lambda - h must stay positive");
    const ImageGrid up = solve_at_lambda(noisy, lambda + h, reg, cfg, warned);
    const ImageGrid um = solve_at_lambda(noisy, lambda - h, reg, cfg, warned);
    return (l2_loss(up, clean) - l2_loss(um, clean)) / (2.0 * h);
}

GridSearchResult lambda_grid_search(const ImageGrid& clean, const ImageGrid& noisy,
                                    const RegularizerSpec& reg, const std::vector<double>& grid,
                                    const SolverConfig& cfg) {
    if (grid.empty()) throw std::invalid_argument("lambda_grid_search: empty grid");
    GridSearchResult out;
    double best = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        const ImageGrid u = solve_at_lambda(noisy, lambda, reg, cfg, nullptr);
        const double cost = 2.0 * l2_loss(u, clean);  // ||clean - u||^2
        out.cost_curve.emplace_back(lambda, cost);
        if (cost < best || (cost == best && lambda < out.lambda_best)) {
            best = cost;
            out.lambda_best = lambda;
        }
    }
    return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("log_grid: bad range");
    std::vector<double> g(n);
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
    return g;
}

}  // namespace adaptv
