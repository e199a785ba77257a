#include "adaptv/solve_tgv.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace adaptv {

TGVProblem TGVProblem::scalar(ImageGrid noisy, double alpha0, double alpha1, double lam) {
    if (!(alpha0 > 0.0) || !(alpha1 > 0.0)) throw std::domain_error("TGVProblem: alpha0, alpha1 must be > 0");
    if (!(lam > 0.0)) throw std::domain_error("TGVProblem: lam must be > 0");
    const int h = noisy.height, w = noisy.width;
    return TGVProblem{std::move(noisy), alpha0, alpha1, WeightMap(h, w, lam), std::nullopt, std::nullopt};
}

TGVProblem TGVProblem::fid_weighted(ImageGrid noisy, double alpha0, double alpha1, WeightMap fid_weight) {
    if (!(alpha0 > 0.0) || !(alpha1 > 0.0)) throw std::domain_error("TGVProblem: alpha0, alpha1 must be > 0");
    TGVProblem p{std::move(noisy), alpha0, alpha1, std::move(fid_weight), std::nullopt, std::nullopt};
    p.validate();
    return p;
}

void TGVProblem::validate() const {
    if (!(alpha0 > 0.0) || !(alpha1 > 0.0)) throw std::domain_error("TGVProblem: alpha0, alpha1 must be > 0");
    if (!fid_weight.same_dims(noisy)) throw std::invalid_argument("TGVProblem: fid_weight dims mismatch");
    validate_weight(fid_weight);
    if (alpha0_map) {
        if (!alpha0_map->same_dims(noisy)) throw std::invalid_argument("TGVProblem: alpha0_map dims mismatch");
        validate_weight(*alpha0_map);
    }
    if (alpha1_map) {
        if (!alpha1_map->same_dims(noisy)) throw std::invalid_argument("TGVProblem: alpha1_map dims mismatch");
        validate_weight(*alpha1_map);
    }
}

namespace {

inline double tensor_norm(double a11, double a12, double a22) {
    return std::sqrt(a11 * a11 + 2.0 * a12 * a12 + a22 * a22);
}

void project_p_inplace(VectorField2& p, double alpha0, const WeightMap* map) {
    for (size_t k = 0; k < p.comp1.size(); ++k) {
        const double r = map ? map->values[k] : alpha0;
        const double n = std::sqrt(p.comp1[k] * p.comp1[k] + p.comp2[k] * p.comp2[k]);
        if (n > r) {
            const double s = r / n;
            p.comp1[k] *= s;
            p.comp2[k] *= s;
        }
    }
}

void project_q_inplace(SymTensorField& q, double alpha1, const WeightMap* map) {
    for (size_t k = 0; k < q.c11.size(); ++k) {
        const double r = map ? map->values[k] : alpha1;
        const double n = tensor_norm(q.c11[k], q.c12[k], q.c22[k]);
        if (n > r) {
            const double s = r / n;
            q.c11[k] *= s;
            q.c12[k] *= s;
            q.c22[k] *= s;
        }
    }
}

}  // namespace

std::pair<VectorField2, SymTensorField> project_dual_tgv(const VectorField2& p,
                                                         const SymTensorField& q,
                                                         double alpha0, double alpha1) {
    if (!(alpha0 > 0.0) || !(alpha1 > 0.0)) throw std::domain_error("project_dual_tgv: radii must be > 0");
    VectorField2 pp = p;
    SymTensorField qq = q;
    project_p_inplace(pp, alpha0, nullptr);
    project_q_inplace(qq, alpha1, nullptr);
    return {std::move(pp), std::move(qq)};
}

double energy_tgv(const ImageGrid& u, const VectorField2& v, const TGVProblem& problem) {
    if (!u.same_dims(problem.noisy)) throw std::invalid_argument("energy_tgv: dimension mismatch");
    if (v.height != u.height || v.width != u.width) throw std::invalid_argument("energy_tgv: v dims mismatch");
    double fid = 0.0;
    for (size_t k = 0; k < u.values.size(); ++k) {
        const double d = u.values[k] - problem.noisy.values[k];
        fid += problem.fid_weight.values[k] * d * d;
    }
    const VectorField2 g = grad(u);
    double first = 0.0;
    for (size_t k = 0; k < g.comp1.size(); ++k) {
        const double d1 = g.comp1[k] - v.comp1[k];
        const double d2 = g.comp2[k] - v.comp2[k];
        const double a0 = problem.alpha0_map ? problem.alpha0_map->values[k] : problem.alpha0;
        first += a0 * std::sqrt(d1 * d1 + d2 * d2);
    }
    const SymTensorField e = sym_grad(v);
    double second = 0.0;
    for (size_t k = 0; k < e.c11.size(); ++k) {
        const double a1 = problem.alpha1_map ? problem.alpha1_map->values[k] : problem.alpha1;
        second += a1 * tensor_norm(e.c11[k], e.c12[k], e.c22[k]);
    }
    return fid + first + second;
}

TGVResult solve_tgv(const TGVProblem& problem, const SolverConfig& cfg) {
    problem.validate();
    cfg.validate();
    const int H = problem.noisy.height, W = problem.noisy.width;
    const double tau = cfg.tau, sigma = cfg.sigma, theta = cfg.theta;

    TGVState st;
    st.u = problem.noisy;
    st.v = VectorField2(H, W);
    st.p = VectorField2(H, W);
    st.q = SymTensorField(H, W);
    st.u_bar = st.u;
    st.v_bar = st.v;

    ImageGrid snapshot = st.u;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        // dual ascent + projection
        VectorField2 gu = grad(st.u_bar);
        for (size_t k = 0; k < st.p.comp1.size(); ++k) {
            st.p.comp1[k] += sigma * (gu.comp1[k] - st.v_bar.comp1[k]);
            st.p.comp2[k] += sigma * (gu.comp2[k] - st.v_bar.comp2[k]);
        }
        project_p_inplace(st.p, problem.alpha0, problem.alpha0_map ? &*problem.alpha0_map : nullptr);

        SymTensorField ev = sym_grad(st.v_bar);
        for (size_t k = 0; k < st.q.c11.size(); ++k) {
            st.q.c11[k] += sigma * ev.c11[k];
            st.q.c12[k] += sigma * ev.c12[k];
            st.q.c22[k] += sigma * ev.c22[k];
        }
        project_q_inplace(st.q, problem.alpha1, problem.alpha1_map ? &*problem.alpha1_map : nullptr);

        // primal descent; prox on u, identity on v
        ImageGrid dv = div(st.p);
        ImageGrid u_new(H, W);
        for (size_t k = 0; k < u_new.values.size(); ++k) {
            const double a = 2.0 * tau * problem.fid_weight.values[k];
            const double arg = st.u.values[k] + tau * dv.values[k];
            u_new.values[k] = (arg + a * problem.noisy.values[k]) / (1.0 + a);
        }
        VectorField2 d2 = div2(st.q);
        VectorField2 v_new(H, W);
        for (size_t k = 0; k < v_new.comp1.size(); ++k) {
            v_new.comp1[k] = st.v.comp1[k] + tau * (st.p.comp1[k] + d2.comp1[k]);
            v_new.comp2[k] = st.v.comp2[k] + tau * (st.p.comp2[k] + d2.comp2[k]);
        }

        for (size_t k = 0; k < st.u_bar.values.size(); ++k)
            st.u_bar.values[k] = u_new.values[k] + theta * (u_new.values[k] - st.u.values[k]);
        for (size_t k = 0; k < st.v_bar.comp1.size(); ++k) {
            st.v_bar.comp1[k] = v_new.comp1[k] + theta * (v_new.comp1[k] - st.v.comp1[k]);
            st.v_bar.comp2[k] = v_new.comp2[k] + theta * (v_new.comp2[k] - st.v.comp2[k]);
        }
        st.u = std::move(u_new);
        st.v = std::move(v_new);
        st.iter = it + 1;

        if ((it + 1) % 10 == 0) {
            double diff = 0.0, nx = 0.0;
            for (size_t k = 0; k < st.u.values.size(); ++k) {
                const double d = st.u.values[k] - snapshot.values[k];
                diff += d * d;
                nx += st.u.values[k] * st.u.values[k];
            }
            residual = std::sqrt(diff) / std::max(std::sqrt(nx), 1e-300);
            snapshot = st.u;
            if (residual <= cfg.tol) {
                converged = true;
                ++it;
                break;
            }
        }
    }

    TGVResult res;
    res.u = st.u;
    res.v = st.v;
    res.diagnostics.iterations = it;
    res.diagnostics.residual = residual;
    res.diagnostics.energy = energy_tgv(res.u, res.v, problem);
    res.diagnostics.converged = converged;
    if (!converged) res.diagnostics.warning = "solve_tgv: max_iter reached before tolerance";
    return res;
}

}  // namespace adaptv
