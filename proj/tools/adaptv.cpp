#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaptv/bilevel.hpp"
#include "adaptv/image_io.hpp"
#include "adaptv/metrics.hpp"
#include "adaptv/scheme.hpp"
#include "adaptv/solve_tgv.hpp"
#include "adaptv/solve_tv.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSolverWarning = 3;

adaptv::WeightMap load_weight(const std::string& path, const std::string& range_path) {
    const adaptv::ImageGrid img = adaptv::load_image(path);
    double lo = 0.0, hi = 1.0;
    if (!range_path.empty()) {
        std::ifstream in(range_path);
        if (!in) throw adaptv::ImageIoError("cannot open weight range file: " + range_path);
        json j = json::parse(in);
        lo = j.at("min").get<double>();
        hi = j.at("max").get<double>();
    }
    adaptv::WeightMap w(img.height, img.width, 1.0);
    for (size_t k = 0; k < img.values.size(); ++k) {
        const double v = lo + (hi - lo) * img.values[k];
        if (!(v > 0.0)) throw std::domain_error("weight map must be strictly positive after dequantization");
        w.values[k] = v;
    }
    return w;
}

void save_weight_with_range(const adaptv::WeightMap& w, const std::string& image_path,
                            const std::string& range_path) {
    double lo = w.values[0], hi = w.values[0];
    for (double v : w.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    adaptv::ImageGrid img(w.height, w.width);
    const double span = hi > lo ? hi - lo : 1.0;
    for (size_t k = 0; k < w.values.size(); ++k) img.values[k] = (w.values[k] - lo) / span;
    adaptv::save_image(img, image_path);
    std::ofstream out(range_path);
    out << json{{"min", lo}, {"max", hi}}.dump(2) << "\n";
}

void apply_solver_json(const json& j, adaptv::SolverConfig& cfg) {
    if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
    if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
    if (j.contains("theta")) cfg.theta = j["theta"].get<double>();
    if (j.contains("max_iter")) cfg.max_iter = j["max_iter"].get<int>();
    if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
    if (j.contains("norm_bound")) cfg.norm_bound = j["norm_bound"].get<double>();
}

void apply_bilevel_json(const json& j, adaptv::BilevelConfig& cfg) {
    if (j.contains("lambda0")) cfg.lambda0 = j["lambda0"].get<double>();
    if (j.contains("zeta")) cfg.zeta = j["zeta"].get<double>();
    if (j.contains("nu")) cfg.nu = j["nu"].get<double>();
    if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
    if (j.contains("max_outer")) cfg.max_outer = j["max_outer"].get<int>();
    if (j.contains("log_space")) cfg.log_space = j["log_space"].get<bool>();
}

void apply_scheme_json(const json& j, adaptv::SchemeConfig& cfg) {
    if (j.contains("rho")) cfg.rho = j["rho"].get<double>();
    if (j.contains("delta")) cfg.delta = j["delta"].get<double>();
    if (j.contains("l_max")) cfg.l_max = j["l_max"].get<int>();
    if (j.contains("regularizer"))
        cfg.regularizer = adaptv::scheme_regularizer_from_string(j["regularizer"].get<std::string>());
    if (j.contains("mollify_k")) cfg.mollify_k = j["mollify_k"].get<double>();
    if (j.contains("alpha0")) cfg.alpha0 = j["alpha0"].get<double>();
    if (j.contains("alpha1")) cfg.alpha1 = j["alpha1"].get<double>();
    if (j.contains("box") && j["box"].contains("c0")) cfg.box.c0 = j["box"]["c0"].get<double>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("bilevel")) apply_bilevel_json(j["bilevel"], cfg.bilevel);
    if (j.contains("solver")) apply_solver_json(j["solver"], cfg.solver);
}

struct SolverFlags {
    std::optional<int> max_iter;
    std::optional<double> tol;
    std::optional<double> tau, sigma, theta;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--max-iter", max_iter, "inner PDHG iteration cap");
        cmd->add_option("--tol", tol, "inner PDHG relative-change tolerance");
        cmd->add_option("--tau", tau, "primal step size");
        cmd->add_option("--sigma", sigma, "dual step size");
        cmd->add_option("--theta", theta, "extrapolation parameter");
    }
    void apply(adaptv::SolverConfig& cfg) const {
        if (max_iter) cfg.max_iter = *max_iter;
        if (tol) cfg.tol = *tol;
        if (tau) cfg.tau = *tau;
        if (sigma) cfg.sigma = *sigma;
        if (theta) cfg.theta = *theta;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive spatially-weighted TV/TGV denoising"};
    app.require_subcommand(1);
    app.fallthrough();  // --strict may come after the subcommand
    bool strict = false;
    app.add_flag("--strict", strict, "escalate solver warnings to exit code 3");

    // ---- denoise ----
    auto* denoise = app.add_subcommand("denoise", "scalar or weighted TV/TGV denoising");
    std::string dn_noisy, dn_out, dn_reg = "tv", dn_weight, dn_weight_range, dn_weight_mode = "fid",
                dn_report;
    double dn_alpha = 0.1, dn_lambda = 1.0, dn_alpha0 = 1.0, dn_alpha1 = 2.0;
    SolverFlags dn_solver;
    denoise->add_option("--noisy,-i", dn_noisy, "noisy input image")->required();
    denoise->add_option("--output,-o", dn_out, "restored output image")->required();
    denoise->add_option("--reg", dn_reg, "regularizer: tv or tgv")
        ->check(CLI::IsMember({"tv", "tgv"}));
    denoise->add_option("--alpha", dn_alpha, "TV regularization weight");
    denoise->add_option("--lambda", dn_lambda, "fidelity weight");
    denoise->add_option("--alpha0", dn_alpha0, "TGV first-order weight");
    denoise->add_option("--alpha1", dn_alpha1, "TGV second-order weight");
    denoise->add_option("--weight", dn_weight, "per-pixel weight map image");
    denoise->add_option("--weight-range", dn_weight_range, "min/max sidecar for the weight map");
    denoise->add_option("--weight-mode", dn_weight_mode, "how the map is applied: reg or fid")
        ->check(CLI::IsMember({"reg", "fid"}));
    denoise->add_option("--report", dn_report, "write solver diagnostics JSON here");
    dn_solver.add_to(denoise);

    // ---- train ----
    auto* train = app.add_subcommand("train", "per-cell fidelity-weight optimization");
    std::string tr_clean, tr_noisy, tr_reg = "tv", tr_cell, tr_trace;
    double tr_c0 = 0.01, tr_alpha0 = 1.0, tr_alpha1 = 2.0;
    adaptv::BilevelConfig tr_bcfg;
    bool tr_verbose = false;
    SolverFlags tr_solver;
    train->add_option("--clean", tr_clean, "clean training image")->required();
    train->add_option("--noisy", tr_noisy, "noisy training image")->required();
    train->add_option("--reg", tr_reg, "regularizer: tv or tgv")->check(CLI::IsMember({"tv", "tgv"}));
    train->add_option("--cell", tr_cell, "dyadic cell LEVEL,IX,IY (default: whole image)");
    train->add_option("--c0", tr_c0, "box constraint parameter");
    train->add_option("--alpha0", tr_alpha0, "TGV first-order weight");
    train->add_option("--alpha1", tr_alpha1, "TGV second-order weight");
    train->add_option("--lambda0", tr_bcfg.lambda0, "initial lambda");
    train->add_option("--zeta", tr_bcfg.zeta, "initial step size");
    train->add_option("--nu", tr_bcfg.nu, "step damping factor");
    train->add_option("--outer-tol", tr_bcfg.tol, "outer stopping tolerance on lambda");
    train->add_option("--max-outer", tr_bcfg.max_outer, "outer iteration cap");
    train->add_flag("--log-space", tr_bcfg.log_space, "take descent steps in log(lambda)");
    train->add_flag("--verbose", tr_verbose, "emit per-iteration JSON lines on stderr");
    train->add_option("--trace", tr_trace, "write the outer trace as JSON lines here");
    tr_solver.add_to(train);

    // ---- subdivide ----
    auto* subdiv = app.add_subcommand("subdivide", "adaptive dyadic subdivision scheme");
    std::string sd_clean, sd_noisy, sd_outdir, sd_config;
    std::optional<std::string> sd_reg;
    std::optional<int> sd_lmax, sd_threads, sd_max_outer;
    std::optional<double> sd_rho, sd_delta, sd_c0, sd_mollify_k, sd_alpha0, sd_alpha1;
    std::optional<double> sd_lambda0, sd_zeta, sd_nu, sd_outer_tol;
    subdiv->add_option("--clean", sd_clean, "clean training image")->required();
    subdiv->add_option("--noisy", sd_noisy, "noisy training image")->required();
    subdiv->add_option("--output,-o", sd_outdir, "output directory")->required();
    subdiv->add_option("--config", sd_config, "JSON config (flags override it)");
    subdiv->add_option("--reg", sd_reg, "tv-fid, tv-reg, tv-reg-mollified or tgv-fid");
    subdiv->add_option("--lmax", sd_lmax, "maximum subdivision depth");
    subdiv->add_option("--rho", sd_rho, "subdivision tolerance");
    subdiv->add_option("--delta", sd_delta, "additive criterion (switches off the rho test)");
    subdiv->add_option("--c0", sd_c0, "box constraint parameter");
    subdiv->add_option("--mollify-k", sd_mollify_k, "Lipschitz constant for tv-reg-mollified");
    subdiv->add_option("--alpha0", sd_alpha0, "TGV first-order weight");
    subdiv->add_option("--alpha1", sd_alpha1, "TGV second-order weight");
    subdiv->add_option("--threads", sd_threads, "cell-level worker cap (0 = auto)");
    subdiv->add_option("--lambda0", sd_lambda0, "initial lambda");
    subdiv->add_option("--zeta", sd_zeta, "initial outer step size");
    subdiv->add_option("--nu", sd_nu, "outer step damping");
    subdiv->add_option("--outer-tol", sd_outer_tol, "outer stopping tolerance");
    subdiv->add_option("--max-outer", sd_max_outer, "outer iteration cap");
    bool sd_log_space = false;
    subdiv->add_flag("--log-space", sd_log_space, "take outer steps in log(lambda)");
    SolverFlags sd_solver_flags;
    sd_solver_flags.add_to(subdiv);

    // ---- metrics ----
    auto* metrics = app.add_subcommand("metrics", "PSNR/SSIM/l2 between two images");
    std::string mt_a, mt_b;
    double mt_peak = 1.0;
    metrics->add_option("a", mt_a, "first image")->required();
    metrics->add_option("b", mt_b, "second image")->required();
    metrics->add_option("--peak", mt_peak, "peak value (1.0 or 255)");

    // ---- noise ----
    auto* noise = app.add_subcommand("noise", "add seeded Gaussian noise");
    std::string ns_in, ns_out, ns_mask;
    double ns_sigma = 0.1;
    uint64_t ns_seed = 0;
    noise->add_option("--input,-i", ns_in, "input image")->required();
    noise->add_option("--output,-o", ns_out, "output image")->required();
    noise->add_option("--sigma", ns_sigma, "noise standard deviation");
    noise->add_option("--seed", ns_seed, "generator seed");
    noise->add_option("--mask", ns_mask, "per-pixel sigma scale image");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*denoise) {
            const adaptv::ImageGrid noisy = adaptv::load_image(dn_noisy);
            adaptv::SolveDiagnostics diag;
            adaptv::ImageGrid restored;
            if (dn_reg == "tv") {
                adaptv::SolverConfig cfg = adaptv::SolverConfig::defaults(adaptv::OperatorKind::tv);
                dn_solver.apply(cfg);
                adaptv::TVProblem prob = adaptv::TVProblem::scalar(noisy, dn_alpha);
                if (!dn_weight.empty()) {
                    adaptv::WeightMap w = load_weight(dn_weight, dn_weight_range);
                    prob = dn_weight_mode == "reg" ? adaptv::TVProblem::reg_weighted(noisy, std::move(w))
                                                   : adaptv::TVProblem::fid_weighted(noisy, std::move(w));
                } else {
                    prob.lam = adaptv::WeightMap(noisy.height, noisy.width, dn_lambda);
                }
                adaptv::TVResult res = adaptv::solve_tv(prob, cfg);
                restored = std::move(res.u);
                diag = res.diagnostics;
            } else {
                adaptv::SolverConfig cfg = adaptv::SolverConfig::defaults(adaptv::OperatorKind::tgv);
                dn_solver.apply(cfg);
                adaptv::TGVProblem prob =
                    dn_weight.empty()
                        ? adaptv::TGVProblem::scalar(noisy, dn_alpha0, dn_alpha1, dn_lambda)
                        : adaptv::TGVProblem::fid_weighted(noisy, dn_alpha0, dn_alpha1,
                                                           load_weight(dn_weight, dn_weight_range));
                adaptv::TGVResult res = adaptv::solve_tgv(prob, cfg);
                restored = std::move(res.u);
                diag = res.diagnostics;
            }
            adaptv::save_image(restored, dn_out);
            if (!dn_report.empty()) {
                std::ofstream out(dn_report);
                out << json{{"iterations", diag.iterations},
                            {"residual", diag.residual},
                            {"energy", diag.energy},
                            {"converged", diag.converged},
                            {"warning", diag.warning}}
                           .dump(2)
                    << "\n";
            }
            if (!diag.warning.empty()) {
                std::cerr << "warning: " << diag.warning << "\n";
                if (strict) return kExitSolverWarning;
            }
            return kExitOk;
        }

        if (*train) {
            const adaptv::ImageGrid clean = adaptv::load_image(tr_clean);
            const adaptv::ImageGrid noisy = adaptv::load_image(tr_noisy);
            adaptv::PixelRect r{0, clean.height, 0, clean.width};
            if (!tr_cell.empty()) {
                adaptv::DyadicCell cell;
                if (std::sscanf(tr_cell.c_str(), "%d,%d,%d", &cell.level, &cell.ix, &cell.iy) != 3 ||
                    !adaptv::cell_valid(cell))
                    throw std::invalid_argument("train: --cell expects LEVEL,IX,IY");
                r = adaptv::pixel_range(cell, clean.height, clean.width);
                if (r.empty()) throw std::invalid_argument("train: cell has no pixels at this image size");
            }
            adaptv::TrainingPair pair(adaptv::extract(clean, r), adaptv::extract(noisy, r));
            const adaptv::RegularizerSpec reg = tr_reg == "tgv"
                                                    ? adaptv::RegularizerSpec::tgv(tr_alpha0, tr_alpha1)
                                                    : adaptv::RegularizerSpec::tv();
            adaptv::SolverConfig cfg = adaptv::SolverConfig::defaults(
                tr_reg == "tgv" ? adaptv::OperatorKind::tgv : adaptv::OperatorKind::tv);
            tr_solver.apply(cfg);
            tr_bcfg.box.c0 = tr_c0;
            tr_bcfg.verbose = tr_verbose;
            adaptv::OptimizeResult res = adaptv::optimize_lambda(pair, reg, tr_bcfg, cfg);
            if (!tr_trace.empty()) {
                std::ofstream out(tr_trace);
                for (const auto& t : res.trace)
                    out << json{{"k", t.k}, {"lambda", t.lambda}, {"loss", t.loss}, {"grad", t.grad}}.dump()
                        << "\n";
            }
            std::cout << json{{"lambda", res.lambda_star},
                              {"cost", res.cost},
                              {"outer_iterations", res.trace.size()},
                              {"warnings", res.warnings}}
                             .dump(2)
                      << "\n";
            if (!res.warnings.empty() && strict) return kExitSolverWarning;
            return kExitOk;
        }

        if (*subdiv) {
            adaptv::SchemeConfig sd_cfg;
            json config_json;
            if (!sd_config.empty()) {
                std::ifstream in(sd_config);
                if (!in) throw adaptv::ImageIoError("cannot open config: " + sd_config);
                config_json = json::parse(in);
                apply_scheme_json(config_json, sd_cfg);
            }
            // flags override the config file
            if (sd_reg) sd_cfg.regularizer = adaptv::scheme_regularizer_from_string(*sd_reg);
            if (sd_lmax) sd_cfg.l_max = *sd_lmax;
            if (sd_rho) sd_cfg.rho = *sd_rho;
            if (sd_delta) sd_cfg.delta = *sd_delta;
            if (sd_c0) sd_cfg.box.c0 = *sd_c0;
            if (sd_mollify_k) sd_cfg.mollify_k = *sd_mollify_k;
            if (sd_alpha0) sd_cfg.alpha0 = *sd_alpha0;
            if (sd_alpha1) sd_cfg.alpha1 = *sd_alpha1;
            if (sd_threads) sd_cfg.threads = *sd_threads;
            if (sd_lambda0) sd_cfg.bilevel.lambda0 = *sd_lambda0;
            if (sd_zeta) sd_cfg.bilevel.zeta = *sd_zeta;
            if (sd_nu) sd_cfg.bilevel.nu = *sd_nu;
            if (sd_outer_tol) sd_cfg.bilevel.tol = *sd_outer_tol;
            if (sd_max_outer) sd_cfg.bilevel.max_outer = *sd_max_outer;
            if (sd_log_space) sd_cfg.bilevel.log_space = true;

            const bool tgv = sd_cfg.regularizer == adaptv::SchemeRegularizer::tgv_fid;
            adaptv::SolverConfig base = adaptv::SolverConfig::defaults(
                tgv ? adaptv::OperatorKind::tgv : adaptv::OperatorKind::tv);
            if (config_json.contains("solver")) apply_solver_json(config_json["solver"], base);
            sd_solver_flags.apply(base);
            sd_cfg.solver = base;

            const adaptv::ImageGrid clean = adaptv::load_image(sd_clean);
            const adaptv::ImageGrid noisy = adaptv::load_image(sd_noisy);
            adaptv::TrainingPair pair(clean, noisy);

            std::filesystem::create_directories(sd_outdir);
            adaptv::SchemeResult result = adaptv::run_scheme(pair, sd_cfg);
            const std::filesystem::path dir(sd_outdir);
            adaptv::save_image(result.restored, (dir / "restored.pgm").string());
            save_weight_with_range(result.weight, (dir / "weight.pgm").string(),
                                   (dir / "weight_range.json").string());
            std::ofstream rep(dir / "report.json");
            rep << adaptv::report_json(result) << "\n";
            for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
            if (!result.warnings.empty() && strict) return kExitSolverWarning;
            return kExitOk;
        }

        if (*metrics) {
            const adaptv::ImageGrid a = adaptv::load_image(mt_a);
            const adaptv::ImageGrid b = adaptv::load_image(mt_b);
            const double p = adaptv::psnr(a, b, mt_peak);
            json out;
            out["psnr"] = std::isfinite(p) ? json(p) : json();
            out["ssim"] = (a.height >= 11 && a.width >= 11) ? json(adaptv::ssim(a, b, mt_peak)) : json();
            out["l2"] = 2.0 * adaptv::l2_loss(a, b);
            std::cout << out.dump(2) << "\n";
            return kExitOk;
        }

        if (*noise) {
            const adaptv::ImageGrid in = adaptv::load_image(ns_in);
            std::optional<adaptv::WeightMap> mask;
            if (!ns_mask.empty()) mask = load_weight(ns_mask, "");
            const adaptv::ImageGrid out =
                adaptv::add_gaussian_noise(in, ns_sigma, ns_seed, mask ? &*mask : nullptr);
            adaptv::save_image(out, ns_out);
            std::cout << json{{"sigma", ns_sigma}, {"seed", ns_seed}}.dump() << "\n";
            return kExitOk;
        }
    } catch (const adaptv::ImageIoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
