#include "adaptv/scheme.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "adaptv/metrics.hpp"

namespace adaptv {

std::string to_string(SchemeRegularizer reg) {
    switch (reg) {
        case SchemeRegularizer::tv_fid: return "tv-fid";
        case SchemeRegularizer::tv_reg: return "tv-reg";
        case SchemeRegularizer::tv_reg_mollified: return "tv-reg-mollified";
        case SchemeRegularizer::tgv_fid: return "tgv-fid";
    }
    return "tv-fid";
}

SchemeRegularizer scheme_regularizer_from_string(const std::string& s) {
    if (s == "tv-fid") return SchemeRegularizer::tv_fid;
    if (s == "tv-reg") return SchemeRegularizer::tv_reg;
    if (s == "tv-reg-mollified") return SchemeRegularizer::tv_reg_mollified;
    if (s == "tgv-fid") return SchemeRegularizer::tgv_fid;
    throw std::invalid_argument("unknown regularizer: " + s);
}

void SchemeConfig::validate(int height, int width) const {
    if (!(rho > 0.0)) throw std::invalid_argument("SchemeConfig: rho must be > 0");
    if (delta && *delta < 0.0) throw std::invalid_argument("SchemeConfig: delta must be >= 0");
    if (l_max < 0) throw std::invalid_argument("SchemeConfig: l_max must be >= 0");
    if ((1LL << l_max) > std::min(height, width))
        throw std::invalid_argument("SchemeConfig: 2^l_max must not exceed the smaller image dimension");
    if (regularizer == SchemeRegularizer::tv_reg_mollified && !(mollify_k > 0.0))
        throw std::invalid_argument("SchemeConfig: mollify_k must be > 0");
    if (regularizer == SchemeRegularizer::tgv_fid && (!(alpha0 > 0.0) || !(alpha1 > 0.0)))
        throw std::invalid_argument("SchemeConfig: alpha0, alpha1 must be > 0");
    if (!box.valid()) throw std::invalid_argument("SchemeConfig: box constraint needs 0 < c0 < 1");
    bilevel.validate();
    solver.validate();
}

bool subdivision_test(double parent_cost, double child_cost_sum, double rho,
                      const std::optional<double>& delta) {
    if (delta) return parent_cost >= child_cost_sum + *delta;
    return child_cost_sum < rho * parent_cost;
}

namespace {

int resolve_threads(int configured) {
    if (configured > 0) return configured;
    if (const char* env = std::getenv("ADAPTIVE_TV_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

RegularizerSpec level3_regularizer(const SchemeConfig& cfg) {
    if (cfg.regularizer == SchemeRegularizer::tgv_fid)
        return RegularizerSpec::tgv(cfg.alpha0, cfg.alpha1);
    return RegularizerSpec::tv();
}

struct CellTask {
    DyadicCell cell;
    double parent_lambda = 0.0;
    double parent_cost = 0.0;
};

struct CellOutcome {
    LevelDecision decision;
    std::array<CellRecord, 4> child_records{};
    std::array<DyadicCell, 4> children{};
    std::vector<std::string> warnings;
};

CellOutcome evaluate_cell(const TrainingPair& pair, const SchemeConfig& cfg,
                          const RegularizerSpec& reg, const CellTask& task) {
    CellOutcome out;
    out.children = subdivide(task.cell);
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        const DyadicCell& child = out.children[i];
        const PixelRect r = pixel_range(child, pair.noisy.height, pair.noisy.width);
        if (r.empty()) {
            out.child_records[i] = CellRecord{cfg.box.clamp(task.parent_lambda), 0.0};
            continue;
        }
        TrainingPair sub(extract(pair.clean, r), extract(pair.noisy, r));
        BilevelConfig bcfg = cfg.bilevel;
        bcfg.box = cfg.box;
        bcfg.lambda0 = task.parent_lambda;  // warm start from the parent cell
        OptimizeResult res = optimize_lambda(sub, reg, bcfg, cfg.solver);
        out.child_records[i] = CellRecord{res.lambda_star, res.cost};
        sum += res.cost;
        for (const std::string& w : res.warnings)
            out.warnings.push_back("cell(" + std::to_string(child.level) + "," + std::to_string(child.ix) +
                                   "," + std::to_string(child.iy) + "): " + w);
    }
    out.decision = LevelDecision{task.cell, task.parent_cost, sum,
                                 subdivision_test(task.parent_cost, sum, cfg.rho, cfg.delta)};
    return out;
}

}  // namespace

SchemeResult run_scheme(const TrainingPair& pair, const SchemeConfig& cfg) {
    const int H = pair.noisy.height, W = pair.noisy.width;
    cfg.validate(H, W);
    const RegularizerSpec reg = level3_regularizer(cfg);
    const int threads = resolve_threads(cfg.threads);

    SchemeResult result;
    result.config = cfg;
    result.height = H;
    result.width = W;
    result.partition = root_partition();

    // Root parameter and cost (Level 3 on the whole image).
    {
        BilevelConfig bcfg = cfg.bilevel;
        bcfg.box = cfg.box;
        OptimizeResult root = optimize_lambda(pair, reg, bcfg, cfg.solver);
        result.root_lambda = root.lambda_star;
        result.root_cost = root.cost;
        result.cell_params[DyadicCell{0, 0, 0}] = CellRecord{root.lambda_star, root.cost};
        for (const std::string& w : root.warnings) result.warnings.push_back("root: " + w);
    }

    for (int level = 0; level < cfg.l_max; ++level) {
        std::vector<CellTask> frontier;
        for (const DyadicCell& c : result.partition.cells) {
            if (c.level != level) continue;
            if (pixel_range(c, H, W).empty()) continue;  // degenerate cells are never subdivided
            const CellRecord& rec = result.cell_params.at(c);
            frontier.push_back(CellTask{c, rec.lambda, rec.cost});
        }
        if (frontier.empty()) {
            result.levels.emplace_back();
            continue;
        }

        std::vector<CellOutcome> outcomes(frontier.size());
        const int n_workers = std::min<int>(threads, static_cast<int>(frontier.size()));
        if (n_workers <= 1) {
            for (size_t i = 0; i < frontier.size(); ++i)
                outcomes[i] = evaluate_cell(pair, cfg, reg, frontier[i]);
        } else {
            std::vector<std::thread> pool;
            std::atomic<size_t> next{0};
            for (int t = 0; t < n_workers; ++t) {
                pool.emplace_back([&]() {
                    while (true) {
                        const size_t i = next.fetch_add(1);
                        if (i >= frontier.size()) break;
                        outcomes[i] = evaluate_cell(pair, cfg, reg, frontier[i]);
                    }
                });
            }
            for (std::thread& t : pool) t.join();
        }

        std::vector<LevelDecision> decisions;
        for (const CellOutcome& out : outcomes) {
            decisions.push_back(out.decision);
            for (const std::string& w : out.warnings) result.warnings.push_back(w);
            if (out.decision.subdivided) {
                subdivide_in(result.partition, out.decision.cell);
                result.cell_params.erase(out.decision.cell);
                for (int i = 0; i < 4; ++i)
                    result.cell_params[out.children[i]] = out.child_records[i];
            }
        }
        result.levels.push_back(std::move(decisions));
    }

    result.weight = final_weight(result, cfg.regularizer);
    if (cfg.regularizer == SchemeRegularizer::tv_reg_mollified)
        result.weight = mollify_lipschitz(result.weight, cfg.mollify_k);

    // Level 2: whole-image weighted solve with the assembled map.
    switch (cfg.regularizer) {
        case SchemeRegularizer::tv_fid: {
            TVResult r = solve_tv(TVProblem::fid_weighted(pair.noisy, result.weight), cfg.solver);
            result.restored = std::move(r.u);
            if (!r.diagnostics.warning.empty()) result.warnings.push_back("level2: " + r.diagnostics.warning);
            break;
        }
        case SchemeRegularizer::tv_reg:
        case SchemeRegularizer::tv_reg_mollified: {
            TVResult r = solve_tv(TVProblem::reg_weighted(pair.noisy, result.weight), cfg.solver);
            result.restored = std::move(r.u);
            if (!r.diagnostics.warning.empty()) result.warnings.push_back("level2: " + r.diagnostics.warning);
            break;
        }
        case SchemeRegularizer::tgv_fid: {
            TGVResult r = solve_tgv(TGVProblem::fid_weighted(pair.noisy, cfg.alpha0, cfg.alpha1, result.weight),
                                    cfg.solver);
            result.restored = std::move(r.u);
            if (!r.diagnostics.warning.empty()) result.warnings.push_back("level2: " + r.diagnostics.warning);
            break;
        }
    }

    result.psnr_value = psnr(result.restored, pair.clean);
    if (H >= 11 && W >= 11) result.ssim_value = ssim(result.restored, pair.clean);
    result.l2_value = 2.0 * l2_loss(result.restored, pair.clean);
    return result;
}

WeightMap final_weight(const SchemeResult& result, SchemeRegularizer mode) {
    const bool reciprocal =
        mode == SchemeRegularizer::tv_reg || mode == SchemeRegularizer::tv_reg_mollified;
    std::map<DyadicCell, double> values;
    for (const auto& [cell, rec] : result.cell_params)
        values[cell] = reciprocal ? 1.0 / rec.lambda : rec.lambda;
    return assemble_weight(result.partition, values, result.height, result.width);
}

StoppingReport stopping_report(const SchemeResult& result) {
    StoppingReport rep;
    rep.cell_count = result.partition.size();
    std::map<int, int> counts;
    for (const DyadicCell& c : result.partition.cells) {
        rep.depth = std::max(rep.depth, c.level);
        counts[c.level] += 1;
    }
    rep.min_cell_side = std::pow(2.0, -rep.depth);
    for (const auto& [lvl, n] : counts) rep.cells_per_level.emplace_back(lvl, n);
    const double lo = result.config.box.lower(), hi = result.config.box.upper();
    for (const auto& [cell, rec] : result.cell_params) {
        if (rec.lambda == lo) rep.lower_bound_active.push_back(cell);
        if (rec.lambda == hi) rep.upper_bound_active.push_back(cell);
    }
    rep.depth_within_limit = rep.depth <= result.config.l_max;
    return rep;
}

std::string report_json(const SchemeResult& result) {
    nlohmann::json j;
    const SchemeConfig& cfg = result.config;
    j["config"] = {
        {"rho", cfg.rho},
        {"l_max", cfg.l_max},
        {"regularizer", to_string(cfg.regularizer)},
        {"box", {{"c0", cfg.box.c0}}},
        {"bilevel",
         {{"lambda0", cfg.bilevel.lambda0},
          {"zeta", cfg.bilevel.zeta},
          {"nu", cfg.bilevel.nu},
          {"tol", cfg.bilevel.tol},
          {"max_outer", cfg.bilevel.max_outer},
          {"log_space", cfg.bilevel.log_space}}},
        {"solver",
         {{"tau", cfg.solver.tau},
          {"sigma", cfg.solver.sigma},
          {"theta", cfg.solver.theta},
          {"max_iter", cfg.solver.max_iter},
          {"tol", cfg.solver.tol},
          {"norm_bound", cfg.solver.norm_bound}}},
    };
    if (cfg.delta) j["config"]["delta"] = *cfg.delta;
    if (cfg.regularizer == SchemeRegularizer::tgv_fid) {
        j["config"]["alpha0"] = cfg.alpha0;
        j["config"]["alpha1"] = cfg.alpha1;
    }
    if (cfg.regularizer == SchemeRegularizer::tv_reg_mollified) j["config"]["mollify_k"] = cfg.mollify_k;

    const double lo = cfg.box.lower(), hi = cfg.box.upper();
    nlohmann::json cells = nlohmann::json::array();
    for (const DyadicCell& c : result.partition.cells) {
        const CellRecord& rec = result.cell_params.at(c);
        cells.push_back({{"level", c.level},
                         {"ix", c.ix},
                         {"iy", c.iy},
                         {"lambda", rec.lambda},
                         {"cost", rec.cost},
                         {"bound_active", rec.lambda == lo || rec.lambda == hi}});
    }
    j["cells"] = std::move(cells);

    nlohmann::json metrics;
    metrics["psnr"] = std::isfinite(result.psnr_value) ? nlohmann::json(result.psnr_value) : nlohmann::json();
    metrics["ssim"] = result.ssim_value ? nlohmann::json(*result.ssim_value) : nlohmann::json();
    metrics["l2"] = result.l2_value;
    j["metrics"] = std::move(metrics);
    j["warnings"] = result.warnings;
    return j.dump(2);
}

}  // namespace adaptv
