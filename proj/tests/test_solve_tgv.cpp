#include <doctest.h>

#include <cmath>

#include "adaptv/grid_ops.hpp"
#include "adaptv/metrics.hpp"
#include "adaptv/solve_tgv.hpp"
#include "test_support.hpp"

using namespace adaptv;
using testsupport::linf_diff;
using testsupport::random_image;

namespace {

SolverConfig tight_tgv(int max_iter = 60000, double tol = 1e-11) {
    SolverConfig cfg = SolverConfig::defaults(OperatorKind::tgv);
    cfg.max_iter = max_iter;
    cfg.tol = tol;
    return cfg;
}

ImageGrid affine_image(int h, int w, double a, double bx, double by) {
    ImageGrid img(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) img.at(i, j) = a + bx * j + by * i;
    return img;
}

}  // namespace

TEST_CASE("project_dual_tgv") {
    VectorField2 p(1, 1);
    SymTensorField q(1, 1);
    p.comp1[0] = 0.0;
    p.comp2[0] = 2.0;
    q.c11[0] = 3.0;
    q.c22[0] = 4.0;
    auto [pp, qq] = project_dual_tgv(p, q, 1.0, 1.0);
    CHECK(pp.comp1[0] == doctest::Approx(0.0));
    CHECK(pp.comp2[0] == doctest::Approx(1.0));
    CHECK(qq.c11[0] == doctest::Approx(0.6));
    CHECK(qq.c22[0] == doctest::Approx(0.8));

    // feasible pair untouched
    VectorField2 p2(1, 1);
    SymTensorField q2(1, 1);
    p2.comp1[0] = 0.3;
    q2.c12[0] = 0.5;  // weighted norm sqrt(2)*0.5 < 1
    auto [pp2, qq2] = project_dual_tgv(p2, q2, 1.0, 1.0);
    CHECK(pp2.comp1[0] == 0.3);
    CHECK(qq2.c12[0] == 0.5);

    // the off-diagonal counts twice in the feasibility norm
    SymTensorField q3(1, 1);
    q3.c12[0] = 1.0;  // weighted norm sqrt(2) > 1
    auto [pp3, qq3] = project_dual_tgv(p2, q3, 1.0, 1.0);
    CHECK(qq3.c12[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("affine images are fixed points regardless of the weights") {
    const ImageGrid plane = affine_image(10, 12, 0.3, 0.015, -0.02);
    const double params[3][3] = {{1.0, 2.0, 1.0}, {0.05, 0.05, 10.0}, {5.0, 1.0, 0.2}};
    for (const auto& prm : params) {
        TGVResult res = solve_tgv(TGVProblem::scalar(plane, prm[0], prm[1], prm[2]), tight_tgv());
        CHECK(linf_diff(res.u, plane) <= 1e-6);
    }
}

TEST_CASE("the optimal v absorbs the gradient of an affine image") {
    const ImageGrid plane = affine_image(8, 8, 0.2, 0.04, 0.01);
    TGVResult res = solve_tgv(TGVProblem::scalar(plane, 1.0, 1.0, 1.0), tight_tgv());
    const VectorField2 g = grad(res.u);
    double first_term = 0.0;
    for (size_t k = 0; k < g.comp1.size(); ++k)
        first_term += std::hypot(g.comp1[k] - res.v.comp1[k], g.comp2[k] - res.v.comp2[k]);
    CHECK(first_term <= 1e-6);
}

TEST_CASE("affine projection is preserved") {
    for (uint64_t seed : {91, 92, 93}) {
        const ImageGrid f = random_image(8, 8, seed);
        TGVResult res = solve_tgv(TGVProblem::scalar(f, 0.1, 0.2, 1.0), tight_tgv());
        const ImageGrid pa = affine_project(res.u);
        const ImageGrid pb = affine_project(f);
        CHECK(linf_diff(pa, pb) <= 1e-6);
    }
}

TEST_CASE("large weights produce an affine result near the affine projection") {
    const ImageGrid f = random_image(8, 8, 101);
    const double big = 40.0 * norm2(f);
    TGVResult res = solve_tgv(TGVProblem::scalar(f, big, big, 1.0), tight_tgv());
    CHECK(linf_diff(res.u, affine_project(res.u)) <= 1e-4);
    CHECK(linf_diff(res.u, affine_project(f)) <= 1e-3);
}

TEST_CASE("scalar equivalence under joint rescaling") {
    const ImageGrid f = random_image(8, 8, 111);
    const double lam = 2.5, a0 = 0.12, a1 = 0.3;
    TGVResult a = solve_tgv(TGVProblem::scalar(f, a0, a1, lam), tight_tgv());
    TGVResult b = solve_tgv(TGVProblem::scalar(f, a0 / lam, a1 / lam, 1.0), tight_tgv());
    CHECK(linf_diff(a.u, b.u) <= 1e-6);
}

TEST_CASE("energy at the solution beats the (noisy, 0) pair and the v=0 bound holds") {
    const ImageGrid f = random_image(9, 9, 121);
    const TGVProblem prob = TGVProblem::scalar(f, 0.15, 0.3, 1.0);
    TGVResult res = solve_tgv(prob, tight_tgv(20000, 1e-10));
    CHECK(res.diagnostics.energy <= energy_tgv(f, VectorField2(9, 9), prob) + 1e-12);
    CHECK(res.diagnostics.energy <= energy_tgv(res.u, VectorField2(9, 9), prob) + 1e-12);
}

TEST_CASE("energy_tgv with v=0 reduces to fidelity plus alpha0*TV") {
    const ImageGrid u = random_image(6, 6, 131);
    const ImageGrid f = random_image(6, 6, 132);
    const TGVProblem prob = TGVProblem::scalar(f, 0.7, 9.9, 1.0);
    const double e = energy_tgv(u, VectorField2(6, 6), prob);
    double fid = 0.0;
    for (size_t k = 0; k < u.values.size(); ++k) {
        const double d = u.values[k] - f.values[k];
        fid += d * d;
    }
    CHECK(e == doctest::Approx(fid + 0.7 * tv_value(u, WeightMap(6, 6, 1.0))));
}

TEST_CASE("uniform per-pixel alpha maps match the scalar path") {
    const ImageGrid f = random_image(8, 8, 151);
    const TGVResult scalar = solve_tgv(TGVProblem::scalar(f, 0.2, 0.5, 1.0), tight_tgv(20000, 1e-10));
    TGVProblem mapped = TGVProblem::scalar(f, 0.2, 0.5, 1.0);
    mapped.alpha0_map = WeightMap(8, 8, 0.2);
    mapped.alpha1_map = WeightMap(8, 8, 0.5);
    const TGVResult with_maps = solve_tgv(mapped, tight_tgv(20000, 1e-10));
    CHECK(linf_diff(scalar.u, with_maps.u) == 0.0);
}

TEST_CASE("non-convergence carries a warning") {
    const ImageGrid f = random_image(12, 12, 141);
    SolverConfig cfg = SolverConfig::defaults(OperatorKind::tgv);
    cfg.max_iter = 3;
    TGVResult res = solve_tgv(TGVProblem::scalar(f, 0.2, 0.4, 1.0), cfg);
    CHECK_FALSE(res.diagnostics.converged);
    CHECK_FALSE(res.diagnostics.warning.empty());
}
