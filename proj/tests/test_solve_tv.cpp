#include <doctest.h>

#include <cmath>

#include "adaptv/metrics.hpp"
#include "adaptv/solve_tv.hpp"
#include "adaptv/validation.hpp"
#include "test_support.hpp"

using namespace adaptv;
using testsupport::random_image;

namespace {

SolverConfig tight_tv(int max_iter = 40000, double tol = 1e-11) {
    SolverConfig cfg = SolverConfig::defaults(OperatorKind::tv);
    cfg.max_iter = max_iter;
    cfg.tol = tol;
    return cfg;
}

}  // namespace

TEST_CASE("project_dual_tv") {
    WeightMap r(1, 2, 1.0);
    VectorField2 p(1, 2);
    p.comp1[0] = 3.0;
    p.comp2[0] = 4.0;
    p.comp1[1] = 0.1;
    p.comp2[1] = -0.2;
    const VectorField2 q = project_dual_tv(p, r);
    CHECK(q.comp1[0] == doctest::Approx(0.6));
    CHECK(q.comp2[0] == doctest::Approx(0.8));
    CHECK(q.comp1[1] == 0.1);  // already feasible, untouched
    CHECK(q.comp2[1] == -0.2);

    // block-constant radii respected per pixel
    WeightMap r2(1, 2, 1.0);
    r2.values[0] = 0.5;
    r2.values[1] = 2.0;
    const VectorField2 q2 = project_dual_tv(p, r2);
    CHECK(std::hypot(q2.comp1[0], q2.comp2[0]) == doctest::Approx(0.5));
    CHECK(q2.comp1[1] == 0.1);
}

TEST_CASE("prox_fidelity closed form and limits") {
    ImageGrid v(1, 1, 0.0), f(1, 1, 1.0);
    CHECK(prox_fidelity(v, WeightMap(1, 1, 1.0), f, 0.5).values[0] == doctest::Approx(0.5));
    // lam -> 0: output -> v
    CHECK(prox_fidelity(v, WeightMap(1, 1, 1e-12), f, 0.5).values[0] == doctest::Approx(0.0));
    // lam huge: output -> noisy
    CHECK(prox_fidelity(v, WeightMap(1, 1, 1e12), f, 0.5).values[0] == doctest::Approx(1.0));
}

TEST_CASE("solve_tv matches the two-pixel closed form") {
    const SolverConfig cfg = tight_tv();
    for (double alpha : {0.05, 0.3, 0.9, 2.0}) {
        for (auto [a, b] : {std::pair{0.0, 1.0}, {0.8, 0.2}, {0.5, 0.55}}) {
            ImageGrid img(1, 2);
            img.at(0, 0) = a;
            img.at(0, 1) = b;
            const TVResult res = solve_tv(TVProblem::scalar(img, alpha), cfg);
            const auto [e1, e2] = two_pixel_rof(a, b, alpha);
            CHECK(std::abs(res.u.at(0, 0) - e1) <= 1e-6);
            CHECK(std::abs(res.u.at(0, 1) - e2) <= 1e-6);
        }
    }
}

TEST_CASE("solve_tv matches taut_string_1d on rows") {
    const SolverConfig cfg = tight_tv();
    for (int n : {2, 16, 101}) {
        const ImageGrid row = random_image(1, n, 500 + n);
        for (double alpha : {0.01, 0.1, 1.0}) {
            const TVResult res = solve_tv(TVProblem::scalar(row, alpha), cfg);
            const auto ts = taut_string_1d(row.values, alpha);
            double err = 0.0;
            for (int j = 0; j < n; ++j) err = std::max(err, std::abs(res.u.values[j] - ts[j]));
            CHECK(err <= 1e-5);
        }
    }
}

TEST_CASE("alpha -> 0 returns the data") {
    const ImageGrid f = random_image(8, 8, 21);
    const TVResult res = solve_tv(TVProblem::scalar(f, 1e-7), tight_tv());
    double num = 0.0, den = 0.0;
    for (size_t k = 0; k < f.values.size(); ++k) {
        const double d = res.u.values[k] - f.values[k];
        num += d * d;
        den += f.values[k] * f.values[k];
    }
    CHECK(std::sqrt(num) <= 1e-5 * std::sqrt(den));
}

TEST_CASE("large alpha yields the constant mean image") {
    for (uint64_t seed : {31, 32, 33}) {
        const ImageGrid f = random_image(8, 8, seed);
        const double alpha = 10.0 * norm2(f);
        const TVResult res = solve_tv(TVProblem::scalar(f, alpha), tight_tv());
        CHECK(testsupport::stddev(res.u) <= 1e-4);
        const double m = mean_value(f);
        for (double v : res.u.values) CHECK(std::abs(v - m) <= 1e-4);
    }
}

TEST_CASE("mean preservation across the alpha ladder") {
    const ImageGrid f = random_image(10, 10, 41);
    const double mf = mean_value(f);
    for (double alpha : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0}) {
        const TVResult res = solve_tv(TVProblem::scalar(f, alpha), tight_tv(4000, 1e-9));
        CHECK(std::abs(mean_value(res.u) - mf) <= 1e-8);
    }
}

TEST_CASE("TV of the solution decreases along increasing alpha") {
    const WeightMap ones(12, 12, 1.0);
    for (uint64_t seed : {51, 52}) {
        const ImageGrid f = random_image(12, 12, seed);
        double prev_tv = tv_value(f, ones) + 1e-5;
        for (int step = 0; step < 10; ++step) {
            const double alpha = 0.01 * std::pow(1.9, step);
            const TVResult res = solve_tv(TVProblem::scalar(f, alpha), tight_tv(20000, 1e-10));
            const double tv = tv_value(res.u, ones);
            CHECK(tv <= prev_tv + 1e-5);
            prev_tv = tv;
        }
    }
}

TEST_CASE("energy descent against feasible competitors and across restarts") {
    const ImageGrid f = random_image(10, 10, 61);
    const TVProblem prob = TVProblem::scalar(f, 0.25);

    const TVResult res = solve_tv(prob, tight_tv());
    CHECK(res.diagnostics.energy <= energy_tv(f, prob) + 1e-12);
    ImageGrid meanimg(10, 10, mean_value(f));
    CHECK(res.diagnostics.energy <= energy_tv(meanimg, prob) + 1e-12);

    double prev = std::numeric_limits<double>::infinity();
    for (double tol : {1e-4, 1e-6, 1e-8}) {
        SolverConfig cfg = tight_tv(40000, tol);
        const TVResult r = solve_tv(prob, cfg);
        CHECK(r.diagnostics.energy <= prev + 1e-9);
        prev = r.diagnostics.energy;
    }
}

TEST_CASE("scalar equivalence between regularizer and fidelity weighting") {
    const ImageGrid f = random_image(9, 9, 71);
    for (double alpha : {0.2, 1.7}) {
        const TVResult a = solve_tv(TVProblem::scalar(f, alpha), tight_tv());
        TVProblem fidp = TVProblem::scalar(f, 1.0);
        fidp.lam = WeightMap(9, 9, 1.0 / alpha);
        fidp.mode = TVMode::fid_weighted;
        const TVResult b = solve_tv(fidp, tight_tv());
        CHECK(testsupport::linf_diff(a.u, b.u) <= 1e-6);
    }
}

TEST_CASE("non-convergence is reported, never silent") {
    const ImageGrid f = random_image(16, 16, 81);
    SolverConfig cfg = SolverConfig::defaults(OperatorKind::tv);
    cfg.max_iter = 3;
    const TVResult res = solve_tv(TVProblem::scalar(f, 0.3), cfg);
    CHECK_FALSE(res.diagnostics.converged);
    CHECK_FALSE(res.diagnostics.warning.empty());
}

TEST_CASE("solver config validation") {
    SolverConfig cfg = SolverConfig::defaults(OperatorKind::tv);
    cfg.tau = 1.0;
    cfg.sigma = 1.0;  // violates tau*sigma*bound^2 <= 1
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    SolverConfig ok = SolverConfig::defaults(OperatorKind::tv);
    CHECK_NOTHROW(ok.validate());

    CHECK_THROWS_AS(TVProblem::scalar(random_image(4, 4, 1), -0.5), std::domain_error);
}

TEST_CASE("weighted-regularizer mode keeps weight jumps sharp") {
    // strong smoothing on the right half only: the output plateaus there
    const int H = 16, W = 32;
    ImageGrid f(H, W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) f.at(i, j) = static_cast<double>(j) / (W - 1);
    WeightMap w(H, W, 0.001);
    for (int i = 0; i < H; ++i)
        for (int j = W / 2; j < W; ++j) w.values[static_cast<size_t>(i) * W + j] = 2.0;
    const TVResult res = solve_tv(TVProblem::reg_weighted(f, w), tight_tv(20000, 1e-10));
    // left half follows the ramp, right half is nearly flat
    const double left_span = res.u.at(H / 2, W / 2 - 2) - res.u.at(H / 2, 1);
    double right_var = 0.0;
    for (int j = W / 2 + 1; j < W - 1; ++j)
        right_var = std::max(right_var, std::abs(res.u.at(H / 2, j + 1) - res.u.at(H / 2, j)));
    CHECK(left_span > 0.3);
    CHECK(right_var < 0.01);
}
