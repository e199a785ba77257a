#include "adaptv/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "adaptv/grid_ops.hpp"
#include "adaptv/metrics.hpp"

namespace adaptv {

void BilevelConfig::validate() const {
    if (!(lambda0 > 0.0)) throw std::invalid_argument("BilevelConfig: lambda0 must be > 0");
    if (!(zeta > 0.0)) throw std::invalid_argument("BilevelConfig: zeta must be > 0");
    if (!(nu > 0.0) || nu > 1.0) throw std::invalid_argument("BilevelConfig: nu must be in (0,1]");
    if (!(tol > 0.0)) throw std::invalid_argument("BilevelConfig: tol must be > 0");
    if (max_outer < 1) throw std::invalid_argument("BilevelConfig: max_outer must be >= 1");
    if (!box.valid()) throw std::invalid_argument("BilevelConfig: box constraint needs 0 < c0 < 1");
}

namespace {

constexpr double kAdjointDivergenceLimit = 1e8;

// Jacobian of the radial disc projection at w, applied to h. Identity inside
// the disc; the boundary uses the outside branch.
inline void dproj_disc(double w1, double w2, double r, double& h1, double& h2) {
    const double n2 = w1 * w1 + w2 * w2;
    if (n2 <= r * r) return;
    const double n = std::sqrt(n2);
    const double d = (w1 * h1 + w2 * h2) / n2;
    const double s = r / n;
    h1 = s * (h1 - w1 * d);
    h2 = s * (h2 - w2 * d);
}

// Same for the tensor ball under the norm sqrt(a11^2 + 2*a12^2 + a22^2).
inline void dproj_tensor(double w11, double w12, double w22, double r,
                         double& h11, double& h12, double& h22) {
    const double n2 = w11 * w11 + 2.0 * w12 * w12 + w22 * w22;
    if (n2 <= r * r) return;
    const double n = std::sqrt(n2);
    const double d = (w11 * h11 + 2.0 * w12 * h12 + w22 * h22) / n2;
    const double s = r / n;
    h11 = s * (h11 - w11 * d);
    h12 = s * (h12 - w12 * d);
    h22 = s * (h22 - w22 * d);
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct LoopStatus {
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    bool diverged = false;
};

PiggybackResult piggyback_tv(const TrainingPair& pair, double lambda, const SolverConfig& cfg,
                             AdjointInjection injection) {
    const int H = pair.noisy.height, W = pair.noisy.width;
    const double tau = cfg.tau, sigma = cfg.sigma, theta = cfg.theta;
    const double du = 1.0 / (1.0 + 2.0 * tau * lambda);
    const ImageGrid& f = pair.noisy;

    ImageGrid x = f, x_bar = f;
    VectorField2 y(H, W);
    AdjointState adj{ImageGrid(H, W), VectorField2(H, W), ImageGrid(H, W)};
    ImageGrid& AX = adj.X;
    VectorField2& AY = adj.Y;
    ImageGrid& AXB = adj.X_bar;  // primal mode: sigma*K^T AY; dual mode: extrapolated X

    ImageGrid snapshot = x;
    LoopStatus status;
    for (int it = 0; it < cfg.max_iter; ++it) {
        VectorField2 w = grad(x_bar);
        for (size_t k = 0; k < w.comp1.size(); ++k) {
            w.comp1[k] = y.comp1[k] + sigma * w.comp1[k];
            w.comp2[k] = y.comp2[k] + sigma * w.comp2[k];
        }
        VectorField2 y_new = w;
        for (size_t k = 0; k < y_new.comp1.size(); ++k) {
            const double n = std::sqrt(y_new.comp1[k] * y_new.comp1[k] + y_new.comp2[k] * y_new.comp2[k]);
            if (n > 1.0) {
                y_new.comp1[k] /= n;
                y_new.comp2[k] /= n;
            }
        }

        VectorField2 AY_new(H, W);
        if (injection == AdjointInjection::primal) {
            ImageGrid drive(H, W);
            for (size_t k = 0; k < drive.values.size(); ++k)
                drive.values[k] = du * (AX.values[k] + (1.0 + theta) * AXB.values[k]);
            VectorField2 gd = grad(drive);
            for (size_t k = 0; k < AY_new.comp1.size(); ++k) {
                double h1 = AY.comp1[k] - tau * gd.comp1[k];
                double h2 = AY.comp2[k] - tau * gd.comp2[k];
                dproj_disc(w.comp1[k], w.comp2[k], 1.0, h1, h2);
                AY_new.comp1[k] = h1;
                AY_new.comp2[k] = h2;
            }
        } else {
            ImageGrid drive(H, W);
            for (size_t k = 0; k < drive.values.size(); ++k)
                drive.values[k] = AXB.values[k] + (x.values[k] - pair.clean.values[k]);
            VectorField2 gd = grad(drive);
            for (size_t k = 0; k < AY_new.comp1.size(); ++k) {
                double h1 = AY.comp1[k] + sigma * gd.comp1[k];
                double h2 = AY.comp2[k] + sigma * gd.comp2[k];
                dproj_disc(w.comp1[k], w.comp2[k], 1.0, h1, h2);
                AY_new.comp1[k] = h1;
                AY_new.comp2[k] = h2;
            }
        }

        ImageGrid dv = div(y_new);
        ImageGrid x_new(H, W);
        for (size_t k = 0; k < x_new.values.size(); ++k)
            x_new.values[k] = du * (x.values[k] + tau * dv.values[k] + 2.0 * tau * lambda * f.values[k]);

        ImageGrid AX_new(H, W);
        if (injection == AdjointInjection::primal) {
            for (size_t k = 0; k < AX_new.values.size(); ++k)
                AX_new.values[k] = du * AX.values[k] + ((1.0 + theta) * du - theta) * AXB.values[k] +
                                   (x.values[k] - pair.clean.values[k]);
            ImageGrid dAY = div(AY_new);
            for (size_t k = 0; k < AXB.values.size(); ++k) AXB.values[k] = -sigma * dAY.values[k];
        } else {
            ImageGrid dAY = div(AY_new);
            for (size_t k = 0; k < AX_new.values.size(); ++k)
                AX_new.values[k] = du * (AX.values[k] + tau * dAY.values[k]);
            for (size_t k = 0; k < AXB.values.size(); ++k)
                AXB.values[k] = AX_new.values[k] + theta * (AX_new.values[k] - AX.values[k]);
        }

        for (size_t k = 0; k < x_bar.values.size(); ++k)
            x_bar.values[k] = x_new.values[k] + theta * (x_new.values[k] - x.values[k]);
        x = std::move(x_new);
        y = std::move(y_new);
        AX = std::move(AX_new);
        AY = std::move(AY_new);
        status.iterations = it + 1;

        if ((it + 1) % 10 == 0) {
            double diff = 0.0, nx = 0.0;
            for (size_t k = 0; k < x.values.size(); ++k) {
                const double d = x.values[k] - snapshot.values[k];
                diff += d * d;
                nx += x.values[k] * x.values[k];
            }
            status.residual = std::sqrt(diff) / std::max(std::sqrt(nx), 1e-300);
            snapshot = x;
            if (status.residual <= cfg.tol) {
                status.converged = true;
                break;
            }
            if (max_abs(AX.values) > kAdjointDivergenceLimit ||
                max_abs(AXB.values) > kAdjointDivergenceLimit) {
                status.diverged = true;
                break;
            }
        }
    }

    PiggybackResult res;
    res.u_hat = x;
    res.adjoint_u = ImageGrid(H, W);
    if (injection == AdjointInjection::primal) {
        const double scale = -2.0 * tau * du / lambda;
        for (size_t k = 0; k < res.adjoint_u.values.size(); ++k)
            res.adjoint_u.values[k] = scale * (AX.values[k] + (1.0 + theta) * AXB.values[k]);
    } else {
        res.adjoint_u = AX;
    }
    double g = 0.0;
    for (size_t k = 0; k < x.values.size(); ++k)
        g += res.adjoint_u.values[k] * (x.values[k] - f.values[k]);
    res.grad = lambda * g;
    res.loss = l2_loss(x, pair.clean);
    res.adjoint_diverged = status.diverged;
    res.diagnostics.iterations = status.iterations;
    res.diagnostics.residual = status.residual;
    res.diagnostics.converged = status.converged;
    TVProblem prob = TVProblem::scalar(f, 1.0);
    prob.lam = WeightMap(H, W, lambda);
    res.diagnostics.energy = energy_tv(x, prob);
    if (status.diverged)
        res.diagnostics.warning = "piggyback_solve: adjoint iterates diverged";
    else if (!status.converged)
        res.diagnostics.warning = "piggyback_solve: max_iter reached before tolerance";
    return res;
}

PiggybackResult piggyback_tgv(const TrainingPair& pair, double lambda, const RegularizerSpec& reg,
                              const SolverConfig& cfg, AdjointInjection injection) {
    const int H = pair.noisy.height, W = pair.noisy.width;
    const double tau = cfg.tau, sigma = cfg.sigma, theta = cfg.theta;
    const double a0 = reg.alpha0, a1 = reg.alpha1;
    const double du = 1.0 / (1.0 + 2.0 * tau * lambda);
    const ImageGrid& f = pair.noisy;

    ImageGrid u = f, u_bar = f;
    VectorField2 v(H, W), v_bar(H, W), p(H, W);
    SymTensorField q(H, W);

    ImageGrid AU(H, W), AUB(H, W);
    VectorField2 AV(H, W), AVB(H, W), AP(H, W);
    SymTensorField AQ(H, W);
    // dual-injection mode uses AUB/AVB as extrapolated adjoint primal iterates

    ImageGrid snapshot = u;
    LoopStatus status;
    for (int it = 0; it < cfg.max_iter; ++it) {
        // forward dual pre-projection arguments
        VectorField2 gu = grad(u_bar);
        VectorField2 wp(H, W);
        for (size_t k = 0; k < wp.comp1.size(); ++k) {
            wp.comp1[k] = p.comp1[k] + sigma * (gu.comp1[k] - v_bar.comp1[k]);
            wp.comp2[k] = p.comp2[k] + sigma * (gu.comp2[k] - v_bar.comp2[k]);
        }
        SymTensorField ev = sym_grad(v_bar);
        SymTensorField wq(H, W);
        for (size_t k = 0; k < wq.c11.size(); ++k) {
            wq.c11[k] = q.c11[k] + sigma * ev.c11[k];
            wq.c12[k] = q.c12[k] + sigma * ev.c12[k];
            wq.c22[k] = q.c22[k] + sigma * ev.c22[k];
        }
        VectorField2 p_new = wp;
        for (size_t k = 0; k < p_new.comp1.size(); ++k) {
            const double n = std::sqrt(p_new.comp1[k] * p_new.comp1[k] + p_new.comp2[k] * p_new.comp2[k]);
            if (n > a0) {
                const double s = a0 / n;
                p_new.comp1[k] *= s;
                p_new.comp2[k] *= s;
            }
        }
        SymTensorField q_new = wq;
        for (size_t k = 0; k < q_new.c11.size(); ++k) {
            const double n = std::sqrt(q_new.c11[k] * q_new.c11[k] + 2.0 * q_new.c12[k] * q_new.c12[k] +
                                       q_new.c22[k] * q_new.c22[k]);
            if (n > a1) {
                const double s = a1 / n;
                q_new.c11[k] *= s;
                q_new.c12[k] *= s;
                q_new.c22[k] *= s;
            }
        }

        // adjoint dual updates
        VectorField2 AP_new(H, W);
        SymTensorField AQ_new(H, W);
        if (injection == AdjointInjection::primal) {
            ImageGrid drive_u(H, W);
            for (size_t k = 0; k < drive_u.values.size(); ++k)
                drive_u.values[k] = du * (AU.values[k] + (1.0 + theta) * AUB.values[k]);
            VectorField2 drive_v(H, W);
            for (size_t k = 0; k < drive_v.comp1.size(); ++k) {
                drive_v.comp1[k] = AV.comp1[k] + (1.0 + theta) * AVB.comp1[k];
                drive_v.comp2[k] = AV.comp2[k] + (1.0 + theta) * AVB.comp2[k];
            }
            VectorField2 gdu = grad(drive_u);
            SymTensorField edv = sym_grad(drive_v);
            for (size_t k = 0; k < AP_new.comp1.size(); ++k) {
                double h1 = AP.comp1[k] - tau * (gdu.comp1[k] - drive_v.comp1[k]);
                double h2 = AP.comp2[k] - tau * (gdu.comp2[k] - drive_v.comp2[k]);
                dproj_disc(wp.comp1[k], wp.comp2[k], a0, h1, h2);
                AP_new.comp1[k] = h1;
                AP_new.comp2[k] = h2;
            }
            for (size_t k = 0; k < AQ_new.c11.size(); ++k) {
                double h11 = AQ.c11[k] - tau * edv.c11[k];
                double h12 = AQ.c12[k] - tau * edv.c12[k];
                double h22 = AQ.c22[k] - tau * edv.c22[k];
                dproj_tensor(wq.c11[k], wq.c12[k], wq.c22[k], a1, h11, h12, h22);
                AQ_new.c11[k] = h11;
                AQ_new.c12[k] = h12;
                AQ_new.c22[k] = h22;
            }
        } else {
            ImageGrid drive_u(H, W);
            for (size_t k = 0; k < drive_u.values.size(); ++k)
                drive_u.values[k] = AUB.values[k] + (u.values[k] - pair.clean.values[k]);
            VectorField2 gdu = grad(drive_u);
            SymTensorField edv = sym_grad(AVB);
            for (size_t k = 0; k < AP_new.comp1.size(); ++k) {
                double h1 = AP.comp1[k] + sigma * (gdu.comp1[k] - AVB.comp1[k]);
                double h2 = AP.comp2[k] + sigma * (gdu.comp2[k] - AVB.comp2[k]);
                dproj_disc(wp.comp1[k], wp.comp2[k], a0, h1, h2);
                AP_new.comp1[k] = h1;
                AP_new.comp2[k] = h2;
            }
            for (size_t k = 0; k < AQ_new.c11.size(); ++k) {
                double h11 = AQ.c11[k] + sigma * edv.c11[k];
                double h12 = AQ.c12[k] + sigma * edv.c12[k];
                double h22 = AQ.c22[k] + sigma * edv.c22[k];
                dproj_tensor(wq.c11[k], wq.c12[k], wq.c22[k], a1, h11, h12, h22);
                AQ_new.c11[k] = h11;
                AQ_new.c12[k] = h12;
                AQ_new.c22[k] = h22;
            }
        }

        // forward primal
        ImageGrid dp = div(p_new);
        ImageGrid u_new(H, W);
        for (size_t k = 0; k < u_new.values.size(); ++k)
            u_new.values[k] = du * (u.values[k] + tau * dp.values[k] + 2.0 * tau * lambda * f.values[k]);
        VectorField2 d2 = div2(q_new);
        VectorField2 v_new(H, W);
        for (size_t k = 0; k < v_new.comp1.size(); ++k) {
            v_new.comp1[k] = v.comp1[k] + tau * (p_new.comp1[k] + d2.comp1[k]);
            v_new.comp2[k] = v.comp2[k] + tau * (p_new.comp2[k] + d2.comp2[k]);
        }

        // adjoint primal
        ImageGrid AU_new(H, W);
        VectorField2 AV_new(H, W);
        if (injection == AdjointInjection::primal) {
            for (size_t k = 0; k < AU_new.values.size(); ++k)
                AU_new.values[k] = du * AU.values[k] + ((1.0 + theta) * du - theta) * AUB.values[k] +
                                   (u.values[k] - pair.clean.values[k]);
            for (size_t k = 0; k < AV_new.comp1.size(); ++k) {
                AV_new.comp1[k] = AV.comp1[k] + AVB.comp1[k];
                AV_new.comp2[k] = AV.comp2[k] + AVB.comp2[k];
            }
            ImageGrid dAP = div(AP_new);
            for (size_t k = 0; k < AUB.values.size(); ++k) AUB.values[k] = -sigma * dAP.values[k];
            VectorField2 dAQ = div2(AQ_new);
            for (size_t k = 0; k < AVB.comp1.size(); ++k) {
                AVB.comp1[k] = -sigma * (AP_new.comp1[k] + dAQ.comp1[k]);
                AVB.comp2[k] = -sigma * (AP_new.comp2[k] + dAQ.comp2[k]);
            }
        } else {
            ImageGrid dAP = div(AP_new);
            for (size_t k = 0; k < AU_new.values.size(); ++k)
                AU_new.values[k] = du * (AU.values[k] + tau * dAP.values[k]);
            VectorField2 dAQ = div2(AQ_new);
            for (size_t k = 0; k < AV_new.comp1.size(); ++k) {
                AV_new.comp1[k] = AV.comp1[k] + tau * (AP_new.comp1[k] + dAQ.comp1[k]);
                AV_new.comp2[k] = AV.comp2[k] + tau * (AP_new.comp2[k] + dAQ.comp2[k]);
            }
            for (size_t k = 0; k < AUB.values.size(); ++k)
                AUB.values[k] = AU_new.values[k] + theta * (AU_new.values[k] - AU.values[k]);
            for (size_t k = 0; k < AVB.comp1.size(); ++k) {
                AVB.comp1[k] = AV_new.comp1[k] + theta * (AV_new.comp1[k] - AV.comp1[k]);
                AVB.comp2[k] = AV_new.comp2[k] + theta * (AV_new.comp2[k] - AV.comp2[k]);
            }
        }

        for (size_t k = 0; k < u_bar.values.size(); ++k)
            u_bar.values[k] = u_new.values[k] + theta * (u_new.values[k] - u.values[k]);
        for (size_t k = 0; k < v_bar.comp1.size(); ++k) {
            v_bar.comp1[k] = v_new.comp1[k] + theta * (v_new.comp1[k] - v.comp1[k]);
            v_bar.comp2[k] = v_new.comp2[k] + theta * (v_new.comp2[k] - v.comp2[k]);
        }
        u = std::move(u_new);
        v = std::move(v_new);
        p = std::move(p_new);
        q = std::move(q_new);
        AU = std::move(AU_new);
        AV = std::move(AV_new);
        AP = std::move(AP_new);
        AQ = std::move(AQ_new);
        status.iterations = it + 1;

        if ((it + 1) % 10 == 0) {
            double diff = 0.0, nx = 0.0;
            for (size_t k = 0; k < u.values.size(); ++k) {
                const double d = u.values[k] - snapshot.values[k];
                diff += d * d;
                nx += u.values[k] * u.values[k];
            }
            status.residual = std::sqrt(diff) / std::max(std::sqrt(nx), 1e-300);
            snapshot = u;
            if (status.residual <= cfg.tol) {
                status.converged = true;
                break;
            }
            if (max_abs(AU.values) > kAdjointDivergenceLimit ||
                max_abs(AUB.values) > kAdjointDivergenceLimit) {
                status.diverged = true;
                break;
            }
        }
    }

    PiggybackResult res;
    res.u_hat = u;
    res.adjoint_u = ImageGrid(H, W);
    if (injection == AdjointInjection::primal) {
        const double scale = -2.0 * tau * du / lambda;
        for (size_t k = 0; k < res.adjoint_u.values.size(); ++k)
            res.adjoint_u.values[k] = scale * (AU.values[k] + (1.0 + theta) * AUB.values[k]);
    } else {
        res.adjoint_u = AU;
    }
    double g = 0.0;
    for (size_t k = 0; k < u.values.size(); ++k)
        g += res.adjoint_u.values[k] * (u.values[k] - f.values[k]);
    res.grad = lambda * g;
    res.loss = l2_loss(u, pair.clean);
    res.adjoint_diverged = status.diverged;
    res.diagnostics.iterations = status.iterations;
    res.diagnostics.residual = status.residual;
    res.diagnostics.converged = status.converged;
    res.diagnostics.energy = energy_tgv(u, v, TGVProblem::scalar(f, a0, a1, lambda));
    if (status.diverged)
        res.diagnostics.warning = "piggyback_solve: adjoint iterates diverged";
    else if (!status.converged)
        res.diagnostics.warning = "piggyback_solve: max_iter reached before tolerance";
    return res;
}

ImageGrid forward_at_lambda(const ImageGrid& noisy, double lambda, const RegularizerSpec& reg,
                            const SolverConfig& cfg, bool* warned) {
    if (reg.kind == RegularizerSpec::Kind::tv) {
        TVProblem prob = TVProblem::scalar(noisy, 1.0);
        prob.lam = WeightMap(noisy.height, noisy.width, lambda);
        prob.mode = TVMode::fid_weighted;
        TVResult r = solve_tv(prob, cfg);
        if (warned && !r.diagnostics.converged) *warned = true;
        return r.u;
    }
    TGVResult r = solve_tgv(TGVProblem::scalar(noisy, reg.alpha0, reg.alpha1, lambda), cfg);
    if (warned && !r.diagnostics.converged) *warned = true;
    return r.u;
}

}  // namespace

PiggybackResult piggyback_solve(const TrainingPair& pair, double lambda,
                                const RegularizerSpec& reg, const SolverConfig& cfg,
                                AdjointInjection injection) {
    cfg.validate();
    if (!(lambda > 0.0)) throw std::domain_error("piggyback_solve: lambda must be > 0");
    if (reg.kind == RegularizerSpec::Kind::tv) return piggyback_tv(pair, lambda, cfg, injection);
    return piggyback_tgv(pair, lambda, reg, cfg, injection);
}

OptimizeResult optimize_lambda(const TrainingPair& pair, const RegularizerSpec& reg,
                               const BilevelConfig& bcfg, const SolverConfig& cfg) {
    bcfg.validate();
    cfg.validate();

    OptimizeResult out;
    double lambda = bcfg.box.clamp(bcfg.lambda0);
    double zeta = bcfg.zeta;
    double log_cap = bcfg.max_log_step;
    bool inner_warned = false;

    for (int k = 1; k <= bcfg.max_outer; ++k) {
        PiggybackResult pg = piggyback_solve(pair, lambda, reg, cfg, bcfg.injection);
        if (!pg.diagnostics.converged && !pg.adjoint_diverged) inner_warned = true;
        out.trace.push_back(OuterTracePoint{k, lambda, pg.loss, pg.grad});
        if (bcfg.verbose)
            std::fprintf(stderr, "{\"k\":%d,\"lambda\":%.17g,\"loss\":%.17g,\"grad\":%.17g}\n", k, lambda,
                         pg.loss, pg.grad);
        if (pg.adjoint_diverged || !std::isfinite(pg.grad)) {
            out.warnings.push_back("optimize_lambda: adjoint solve aborted; keeping current lambda");
            break;
        }
        double lambda_new;
        if (bcfg.log_space) {
            double step = zeta * lambda * pg.grad;
            if (log_cap > 0.0) step = std::clamp(step, -log_cap, log_cap);
            lambda_new = bcfg.box.clamp(std::exp(std::log(lambda) - step));
        } else {
            lambda_new = bcfg.box.clamp(lambda - zeta * pg.grad);
        }
        zeta *= bcfg.nu;
        log_cap *= bcfg.nu;  // the trust region contracts with the step size
        const double moved = std::abs(lambda_new - lambda);
        lambda = lambda_new;
        if (moved <= bcfg.tol) break;
    }
    if (inner_warned)
        out.warnings.push_back("optimize_lambda: an inner solve stopped at max_iter before tolerance");

    out.lambda_star = lambda;
    bool warned = false;
    const ImageGrid u_star = forward_at_lambda(pair.noisy, lambda, reg, cfg, &warned);
    if (warned) out.warnings.push_back("optimize_lambda: final solve stopped at max_iter before tolerance");
    out.cost = 2.0 * l2_loss(u_star, pair.clean);
    return out;
}

}  // namespace adaptv
