#include <doctest.h>

#include <cmath>

#include "adaptv/bilevel.hpp"
#include "adaptv/validation.hpp"
#include "test_support.hpp"

using namespace adaptv;
using testsupport::random_image;

namespace {

SolverConfig inner_cfg(OperatorKind op, int max_iter = 30000, double tol = 1e-9) {
    SolverConfig cfg = SolverConfig::defaults(op);
    cfg.max_iter = max_iter;
    cfg.tol = tol;
    return cfg;
}

TrainingPair smooth_pair(int h, int w, uint64_t seed, double sigma = 0.12) {
    ImageGrid clean(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const double x = (j + 0.5) / w, y = (i + 0.5) / h;
            clean.at(i, j) = (x < 0.5 ? 0.3 : 0.7) + 0.1 * std::sin(3.0 * y);
        }
    return TrainingPair(clean, testsupport::noisy_version(clean, sigma, seed));
}

}  // namespace

TEST_CASE("piggyback gradient matches central finite differences (TV)") {
    const SolverConfig cfg = inner_cfg(OperatorKind::tv);
    int checked = 0;
    for (uint64_t seed : {201, 202, 203, 204}) {
        const TrainingPair pair = smooth_pair(12, 12, seed);
        for (double lambda : {0.7, 1.6}) {
            const PiggybackResult pg = piggyback_solve(pair, lambda, RegularizerSpec::tv(), cfg);
            const double fd =
                fd_hypergradient(pair.clean, pair.noisy, lambda, 1e-3, RegularizerSpec::tv(), cfg);
            if (std::abs(fd) < 1e-10) continue;  // flat region, nothing to compare
            CHECK(std::abs(pg.grad - fd) <= 5e-2 * std::abs(fd));
            ++checked;
        }
    }
    CHECK(checked >= 4);
}

TEST_CASE("piggyback gradient matches central finite differences (TGV)") {
    const SolverConfig cfg = inner_cfg(OperatorKind::tgv);
    const RegularizerSpec reg = RegularizerSpec::tgv(0.3, 0.6);
    int checked = 0;
    for (uint64_t seed : {211, 212}) {
        const TrainingPair pair = smooth_pair(10, 10, seed);
        const double lambda = 1.0;
        const PiggybackResult pg = piggyback_solve(pair, lambda, reg, cfg);
        const double fd = fd_hypergradient(pair.clean, pair.noisy, lambda, 1e-3, reg, cfg);
        if (std::abs(fd) < 1e-10) continue;
        CHECK(std::abs(pg.grad - fd) <= 5e-2 * std::abs(fd));
        ++checked;
    }
    CHECK(checked >= 1);
}

TEST_CASE("clean == noisy pushes lambda up; clean == mean pushes it down") {
    const ImageGrid f = random_image(8, 8, 221);
    const SolverConfig cfg = inner_cfg(OperatorKind::tv, 20000, 1e-9);

    SUBCASE("grad <= 0 when the data is already clean") {
        const TrainingPair pair(f, f);
        for (double lambda : {0.5, 1.0, 4.0}) {
            const PiggybackResult pg = piggyback_solve(pair, lambda, RegularizerSpec::tv(), cfg);
            CHECK(pg.grad <= 1e-12);
        }
    }
    SUBCASE("grad >= 0 when the target is the mean image") {
        const TrainingPair pair(ImageGrid(8, 8, mean_value(f)), f);
        const PiggybackResult pg = piggyback_solve(pair, 5.0, RegularizerSpec::tv(), cfg);
        CHECK(pg.grad >= -1e-12);
    }
}

TEST_CASE("boundary optima hit the box bounds exactly") {
    // a strong step keeps the loss responsive across the whole box
    ImageGrid f(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 4; j < 8; ++j) f.at(i, j) = 1.0;
    const SolverConfig cfg = inner_cfg(OperatorKind::tv, 20000, 1e-9);
    BilevelConfig bcfg;
    bcfg.box.c0 = 0.5;
    bcfg.zeta = 1e4;  // one step reaches the bound, the next one stays
    bcfg.nu = 1.0;
    bcfg.tol = 1e-6;
    bcfg.max_outer = 10;

    SUBCASE("clean == noisy lands on the upper bound") {
        const OptimizeResult res = optimize_lambda(TrainingPair(f, f), RegularizerSpec::tv(), bcfg, cfg);
        CHECK(res.lambda_star == bcfg.box.upper());
    }
    SUBCASE("clean == mean lands on the lower bound") {
        const OptimizeResult res =
            optimize_lambda(TrainingPair(ImageGrid(8, 8, mean_value(f)), f), RegularizerSpec::tv(), bcfg, cfg);
        CHECK(res.lambda_star == bcfg.box.lower());
    }
}

TEST_CASE("optimizer stays inside the box and does not increase the loss") {
    const TrainingPair pair = smooth_pair(12, 12, 241);
    const SolverConfig cfg = inner_cfg(OperatorKind::tv, 12000, 1e-8);
    BilevelConfig bcfg;
    bcfg.box.c0 = 0.02;
    bcfg.zeta = 0.5;
    bcfg.max_outer = 30;
    const OptimizeResult res = optimize_lambda(pair, RegularizerSpec::tv(), bcfg, cfg);
    REQUIRE_FALSE(res.trace.empty());
    for (const auto& t : res.trace) {
        CHECK(t.lambda >= bcfg.box.lower());
        CHECK(t.lambda <= bcfg.box.upper());
    }
    CHECK(res.trace.back().loss <= res.trace.front().loss + 1e-9);
    CHECK(res.lambda_star >= bcfg.box.lower());
    CHECK(res.lambda_star <= bcfg.box.upper());
}

TEST_CASE("optimizer agrees with a log-grid search within one grid cell") {
    const TrainingPair pair = smooth_pair(12, 12, 251);
    const SolverConfig cfg = inner_cfg(OperatorKind::tv, 12000, 1e-8);
    BilevelConfig bcfg;
    bcfg.box.c0 = 0.01;
    bcfg.zeta = 2.0;
    bcfg.nu = 0.9;
    bcfg.max_outer = 80;
    bcfg.tol = 1e-5;
    bcfg.log_space = true;  // the optimum sits decades away from lambda0
    const OptimizeResult res = optimize_lambda(pair, RegularizerSpec::tv(), bcfg, cfg);

    const auto grid = log_grid(bcfg.box.lower(), bcfg.box.upper(), 64);
    const GridSearchResult gs = lambda_grid_search(pair.clean, pair.noisy, RegularizerSpec::tv(), grid, cfg);
    const double cell = std::log(grid[1]) - std::log(grid[0]);
    CHECK(std::abs(std::log(res.lambda_star) - std::log(gs.lambda_best)) <= cell + 1e-12);
}

TEST_CASE("interior optimum exists for a pair satisfying the data conditions") {
    // TV(clean) < TV(noisy) and ||noisy-clean||^2 < ||mean(noisy)-clean||^2
    const TrainingPair pair = smooth_pair(16, 16, 261, 0.08);
    const SolverConfig cfg = inner_cfg(OperatorKind::tv, 12000, 1e-8);
    const auto grid = log_grid(1e-3, 1e3, 64);
    const GridSearchResult gs = lambda_grid_search(pair.clean, pair.noisy, RegularizerSpec::tv(), grid, cfg);
    CHECK(gs.lambda_best > grid.front());
    CHECK(gs.lambda_best < grid.back());
}

TEST_CASE("dual-injection variant runs and reports adjoints") {
    const TrainingPair pair = smooth_pair(8, 8, 271);
    const SolverConfig cfg = inner_cfg(OperatorKind::tv, 4000, 1e-8);
    const PiggybackResult pg =
        piggyback_solve(pair, 1.0, RegularizerSpec::tv(), cfg, AdjointInjection::dual);
    CHECK(std::isfinite(pg.grad));
    CHECK(pg.u_hat.size() == pair.noisy.size());
}

TEST_CASE("bilevel config validation") {
    BilevelConfig bad;
    bad.nu = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    BilevelConfig bad2;
    bad2.box.c0 = 1.5;
    CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
}
