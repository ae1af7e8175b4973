#include <doctest.h>

#include <cmath>

#include "oracles/fixed_quadrature.hpp"
#include "sbspec/errors.hpp"
#include "sbspec/shapes.hpp"

using namespace sbspec;

TEST_CASE("bump values") {
    CHECK(bump(0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    auto odd = make_bump_shape({0.0, 1.0});
    CHECK(odd(0.0) == 0.0);
    auto lin = make_bump_shape({1.0, 1.0});
    CHECK(lin(0.5) == doctest::Approx(1.5 * std::exp(-4.0 / 3.0)).epsilon(1e-14));
    for (double xi : {-1.0, 1.0, 1.5, -3.0}) {
        CHECK(lin(xi) == 0.0);
        CHECK(lin.derivative(xi, 2) == 0.0);
    }
}

TEST_CASE("derivatives agree with finite differences") {
    auto f = make_bump_shape({0.3, -1.0, 2.0}, 1);
    const double h = 1e-3;
    for (double xi : {-0.8, -0.3, 0.0, 0.45, 0.9}) {
        for (int k = 0; k < 3; ++k) {
            const double fd = (8 * (f.derivative(xi + h, k) - f.derivative(xi - h, k)) -
                               (f.derivative(xi + 2 * h, k) - f.derivative(xi - 2 * h, k))) /
                              (12 * h);
            CHECK(f.derivative(xi, k + 1) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("invalid shapes are rejected") {
    CHECK_THROWS_AS(make_bump_shape(std::span<const double>{}), InvalidShapeError);
    CHECK_THROWS_AS(make_bump_shape({0.0, 0.0}), InvalidShapeError);
    CHECK_THROWS_AS(make_bump_shape({1.0, NAN}), InvalidShapeError);
    CHECK_THROWS_AS(make_bump_shape({1.0}, 7), InvalidShapeError);
}

TEST_CASE("moments against fixed-grid quadrature") {
    auto b = make_bump_shape({1.0});
    const double ref = oracle::richardson_quadrature([](double x) { return bump(x); }, -1.0, 1.0, 64);
    CHECK(moment(b, 0) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(std::abs(moment(b, 0) - 0.443993816) < 1e-8);
    CHECK(std::abs(moment(make_bump_shape({0.0, 1.0}), 0)) < 1e-10);
    CHECK(std::abs(moment(b, 1)) < 1e-10);

    auto f = make_bump_shape({0.2, 1.0, -0.7, 0.4}, 2);
    for (int k = 0; k <= 5; ++k) {
        const double fact = std::tgamma(k + 1.0);
        const double r = oracle::richardson_quadrature([&](double x) { return std::pow(x, k) * f(x) / fact; },
                                                       -1.0, 1.0, 64);
        CHECK(moment(f, k) == doctest::Approx(r).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("reflection flips odd moments") {
    auto f = make_bump_shape({0.5, 1.0, 0.25, -2.0});
    auto g = make_bump_shape({0.5, -1.0, 0.25, 2.0});
    for (int k = 0; k <= 6; ++k) {
        CHECK(std::abs(moment(g, k) - ((k % 2) ? -1.0 : 1.0) * moment(f, k)) < 1e-9);
    }
}

TEST_CASE("delta-like classification") {
    const double m0 = moment(make_bump_shape({1.0}), 0);
    auto f0 = make_bump_shape({1.0 / m0});
    auto f1 = make_bump_shape({1.0 / m0}, 1);
    CHECK(is_delta_like(f0, 0).delta_like);
    auto r1 = is_delta_like(f1, 1);
    CHECK(r1.delta_like);
    CHECK(std::abs(r1.moments.values[0]) < 1e-10);
    CHECK(r1.moments.values[1] == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK_FALSE(is_delta_like(make_bump_shape({1.0}), 1).delta_like);
    auto f3 = make_bump_shape({1.0 / m0}, 3);
    CHECK(is_delta_like(f3, 3).delta_like);
    CHECK_FALSE(is_delta_like(f3, 2).delta_like);
    for (int n = 0; n <= 3; ++n) {
        CHECK(is_delta_like(make_bump_shape({1.0 / m0}, n), n, 1e-8, 10).delta_like ==
              is_delta_like(make_bump_shape({1.0 / m0}, n), n, 1e-8, 15).delta_like);
    }
}

TEST_CASE("moment rejects negative order") {
    CHECK_THROWS_AS(moment(make_bump_shape({1.0}), -1), DomainError);
}
