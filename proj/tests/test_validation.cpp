#include <doctest.h>

#include <cmath>
#include <numeric>

#include "adaptv/validation.hpp"
#include "test_support.hpp"

using namespace adaptv;

TEST_CASE("two_pixel_rof closed form") {
    SUBCASE("equal pixels stay put") {
        auto [u1, u2] = two_pixel_rof(0.7, 0.7, 1.3);
        CHECK(u1 == 0.7);
        CHECK(u2 == 0.7);
    }
    SUBCASE("above threshold both collapse to the mean") {
        auto [u1, u2] = two_pixel_rof(0.0, 1.0, 2.0);
        CHECK(u1 == doctest::Approx(0.5));
        CHECK(u2 == doctest::Approx(0.5));
    }
    SUBCASE("below threshold the difference shrinks by alpha") {
        auto [u1, u2] = two_pixel_rof(0.0, 1.0, 0.5);
        CHECK(u1 == doctest::Approx(0.25));
        CHECK(u2 == doctest::Approx(0.75));
    }
    SUBCASE("mean preserved and order kept, either sign") {
        auto [u1, u2] = two_pixel_rof(1.0, 0.2, 0.3);
        CHECK(u1 + u2 == doctest::Approx(1.2));
        CHECK(u1 == doctest::Approx(0.85));
        CHECK(u2 == doctest::Approx(0.35));
    }
}

TEST_CASE("taut_string_1d matches closed forms") {
    SUBCASE("constant signal is a fixed point") {
        std::vector<double> y(9, 0.3);
        const auto u = taut_string_1d(y, 0.8);
        for (double v : u) CHECK(v == doctest::Approx(0.3));
    }
    SUBCASE("two samples agree with two_pixel_rof") {
        for (double alpha : {0.0, 0.1, 0.5, 1.0, 3.0}) {
            for (auto [a, b] : {std::pair{0.0, 1.0}, {0.9, 0.1}, {0.4, 0.45}}) {
                const auto u = taut_string_1d({a, b}, alpha);
                const auto [e1, e2] = two_pixel_rof(a, b, alpha);
                CHECK(u[0] == doctest::Approx(e1).epsilon(1e-12));
                CHECK(u[1] == doctest::Approx(e2).epsilon(1e-12));
            }
        }
    }
    SUBCASE("large alpha flattens a step to its mean") {
        std::vector<double> y = {0, 0, 0, 0, 1, 1, 1, 1};
        const auto u = taut_string_1d(y, 100.0);
        for (double v : u) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("mean is preserved") {
        const auto y = testsupport::random_image(1, 33, 77).values;
        for (double alpha : {0.05, 0.4, 2.0}) {
            const auto u = taut_string_1d(y, alpha);
            const double my = std::accumulate(y.begin(), y.end(), 0.0);
            const double mu = std::accumulate(u.begin(), u.end(), 0.0);
            CHECK(mu == doctest::Approx(my).epsilon(1e-12));
        }
    }
    SUBCASE("energy no worse than input and mean signals") {
        const auto y = testsupport::random_image(1, 25, 78).values;
        const double alpha = 0.3;
        auto energy = [&](const std::vector<double>& u) {
            double e = 0.0;
            for (size_t i = 0; i < u.size(); ++i) e += (u[i] - y[i]) * (u[i] - y[i]);
            for (size_t i = 0; i + 1 < u.size(); ++i) e += alpha * std::abs(u[i + 1] - u[i]);
            return e;
        };
        const auto u = taut_string_1d(y, alpha);
        CHECK(energy(u) <= energy(y) + 1e-12);
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
        CHECK(energy(u) <= energy(std::vector<double>(y.size(), mean)) + 1e-12);
    }
}

TEST_CASE("log_grid spans the range") {
    const auto g = log_grid(0.01, 100.0, 64);
    REQUIRE(g.size() == 64);
    CHECK(g.front() == doctest::Approx(0.01));
    CHECK(g.back() == doctest::Approx(100.0));
    for (size_t i = 0; i + 1 < g.size(); ++i) CHECK(g[i] < g[i + 1]);
}
