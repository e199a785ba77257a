#include "adaptv/solve_tv.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace adaptv {

SolverConfig SolverConfig::defaults(OperatorKind op) {
    SolverConfig cfg;
    cfg.norm_bound = op_norm_bound(op);
    cfg.tau = 1.0 / cfg.norm_bound;
    cfg.sigma = 1.0 / cfg.norm_bound;
    return cfg;
}

void SolverConfig::validate() const {
    if (!(tau > 0.0) || !(sigma > 0.0)) throw std::invalid_argument("SolverConfig: tau, sigma must be > 0");
    if (theta < 0.0 || theta > 1.0) throw std::invalid_argument("SolverConfig: theta must be in [0,1]");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be > 0");
    if (!(norm_bound > 0.0)) throw std::invalid_argument("SolverConfig: norm_bound must be > 0");
    if (tau * sigma * norm_bound * norm_bound > 1.0 + 1e-12)
        throw std::invalid_argument("SolverConfig: tau*sigma*norm_bound^2 must be <= 1");
}

TVProblem TVProblem::scalar(ImageGrid noisy, double alpha) {
    if (!(alpha > 0.0)) throw std::domain_error("TVProblem: alpha must be > 0");
    const int h = noisy.height, w = noisy.width;
    TVProblem p{std::move(noisy), WeightMap(h, w, alpha), WeightMap(h, w, 1.0), TVMode::scalar};
    return p;
}

TVProblem TVProblem::reg_weighted(ImageGrid noisy, WeightMap reg_weight) {
    const int h = noisy.height, w = noisy.width;
    TVProblem p{std::move(noisy), std::move(reg_weight), WeightMap(h, w, 1.0), TVMode::reg_weighted};
    p.validate();
    return p;
}

TVProblem TVProblem::fid_weighted(ImageGrid noisy, WeightMap fid_weight) {
    const int h = noisy.height, w = noisy.width;
    TVProblem p{std::move(noisy), WeightMap(h, w, 1.0), std::move(fid_weight), TVMode::fid_weighted};
    p.validate();
    return p;
}

void TVProblem::validate() const {
    if (!radii.same_dims(noisy) || !lam.same_dims(noisy))
        throw std::invalid_argument("TVProblem: weight dimensions must match the image");
    validate_weight(radii);
    validate_weight(lam);
}

VectorField2 project_dual_tv(const VectorField2& p, const WeightMap& radii) {
    if (p.height != radii.height || p.width != radii.width)
        throw std::invalid_argument("project_dual_tv: dimension mismatch");
    VectorField2 out = p;
    for (size_t k = 0; k < out.comp1.size(); ++k) {
        const double n = std::sqrt(out.comp1[k] * out.comp1[k] + out.comp2[k] * out.comp2[k]);
        const double r = radii.values[k];
        if (n > r) {
            const double s = r / n;
            out.comp1[k] *= s;
            out.comp2[k] *= s;
        }
    }
    return out;
}

ImageGrid prox_fidelity(const ImageGrid& v, const WeightMap& lam, const ImageGrid& noisy, double tau) {
    if (!lam.same_dims(v) || !v.same_dims(noisy))
        throw std::invalid_argument("prox_fidelity: dimension mismatch");
    if (!(tau > 0.0)) throw std::invalid_argument("prox_fidelity: tau must be > 0");
    ImageGrid out = v;
    for (size_t k = 0; k < out.values.size(); ++k) {
        const double a = 2.0 * tau * lam.values[k];
        out.values[k] = (v.values[k] + a * noisy.values[k]) / (1.0 + a);
    }
    return out;
}

double energy_tv(const ImageGrid& u, const TVProblem& problem) {
    if (!u.same_dims(problem.noisy)) throw std::invalid_argument("energy_tv: dimension mismatch");
    double fid = 0.0;
    for (size_t k = 0; k < u.values.size(); ++k) {
        const double d = u.values[k] - problem.noisy.values[k];
        fid += problem.lam.values[k] * d * d;
    }
    const VectorField2 g = grad(u);
    double tv = 0.0;
    for (size_t k = 0; k < g.comp1.size(); ++k)
        tv += problem.radii.values[k] * std::sqrt(g.comp1[k] * g.comp1[k] + g.comp2[k] * g.comp2[k]);
    return fid + tv;
}

TVResult solve_tv(const TVProblem& problem, const SolverConfig& cfg) {
    problem.validate();
    cfg.validate();
    const int H = problem.noisy.height, W = problem.noisy.width;
    const double tau = cfg.tau, sigma = cfg.sigma, theta = cfg.theta;

    SolverState st;
    st.x = problem.noisy;
    st.y = VectorField2(H, W);
    st.x_bar = st.x;

    ImageGrid snapshot = st.x;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        VectorField2 w = grad(st.x_bar);
        for (size_t k = 0; k < w.comp1.size(); ++k) {
            w.comp1[k] = st.y.comp1[k] + sigma * w.comp1[k];
            w.comp2[k] = st.y.comp2[k] + sigma * w.comp2[k];
        }
        st.y = project_dual_tv(w, problem.radii);

        ImageGrid v = div(st.y);
        for (size_t k = 0; k < v.values.size(); ++k)
            v.values[k] = st.x.values[k] + tau * v.values[k];
        ImageGrid x_new = prox_fidelity(v, problem.lam, problem.noisy, tau);

        for (size_t k = 0; k < st.x_bar.values.size(); ++k)
            st.x_bar.values[k] = x_new.values[k] + theta * (x_new.values[k] - st.x.values[k]);
        st.x = std::move(x_new);
        st.iter = it + 1;

        if ((it + 1) % 10 == 0) {
            double diff = 0.0, nx = 0.0;
            for (size_t k = 0; k < st.x.values.size(); ++k) {
                const double d = st.x.values[k] - snapshot.values[k];
                diff += d * d;
                nx += st.x.values[k] * st.x.values[k];
            }
            residual = std::sqrt(diff) / std::max(std::sqrt(nx), 1e-300);
            snapshot = st.x;
            if (residual <= cfg.tol) {
                converged = true;
                ++it;
                break;
            }
        }
    }

    TVResult res;
    res.u = st.x;
    res.diagnostics.iterations = it;
    res.diagnostics.residual = residual;
    res.diagnostics.energy = energy_tv(res.u, problem);
    res.diagnostics.converged = converged;
    if (!converged) res.diagnostics.warning = "solve_tv: max_iter reached before tolerance";
    return res;
}

}  // namespace adaptv
