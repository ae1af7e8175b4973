#include <doctest.h>

#include <cmath>

#include "oracles/beam.hpp"
#include "sbspec/errors.hpp"
#include "sbspec/limit.hpp"

using namespace sbspec;

TEST_CASE("nonresonant limit is the union of clamped halves") {
    Problem p;
    p.b = 1.3;
    p.alpha = 1000.0;
    p.Psi = make_bump_shape({0.0, 1.0});
    auto s = limit_spectrum_nonresonant(p, 0.0, 2000.0);
    std::vector<double> expect;
    for (int n = 1; n <= 3; ++n) {
        for (double len : {1.0, 1.3}) {
            const double l = oracle::clamped_beam_lambda(n, len);
            if (l < 2000.0) expect.push_back(l);
        }
    }
    std::sort(expect.begin(), expect.end());
    REQUIRE(s.pairs.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(s.pairs[i].lambda == doctest::Approx(expect[i]).epsilon(1e-9));
        CHECK_FALSE(s.pairs[i].multiple);
        // eigenfunction vanishes on one half
        const double l = s.pairs[i].y.eval(-0.5), r = s.pairs[i].y.eval(0.5);
        CHECK(std::min(std::abs(l), std::abs(r)) == 0.0);
    }
}

TEST_CASE("equal halves give double eigenvalues") {
    Problem p;
    p.alpha = 1000.0;
    p.Psi = make_bump_shape({0.0, 1.0});
    auto s = limit_spectrum_nonresonant(p, 0.0, 600.0);
    REQUIRE(s.pairs.size() == 2);
    CHECK(s.pairs[0].multiple);
    CHECK(s.pairs[1].multiple);
    CHECK(s.pairs[0].lambda == doctest::Approx(oracle::clamped_beam_lambda(1, 1.0)).epsilon(1e-9));
}

TEST_CASE("resonant interface with theta = 1 and kappa = 0 pins the beam at 0") {
    Problem p;
    InterfaceConditions ic{LimitMode::Resonant, 1.0, 0.0};
    auto s = limit_spectrum_resonant(p, ic, 0.0, 3000.0);
    // odd modes of the full clamped beam and clamped modes of each half
    std::vector<double> expect{oracle::clamped_beam_lambda(2, 2.0), oracle::clamped_beam_lambda(1, 1.0),
                               oracle::clamped_beam_lambda(4, 2.0)};
    REQUIRE(s.pairs.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(s.pairs[i].lambda == doctest::Approx(expect[i]).epsilon(1e-9));
}

TEST_CASE("resonant limit eigenfunctions are orthogonal and satisfy the interface") {
    Problem p;
    p.Psi = make_bump_shape({0.0, 1.0});
    p.Phi = make_bump_shape({1.0});
    p.beta = 1.0;
    auto r = resonance_at(p.Psi, resonant_set(p.Psi, 2000.0, 2500.0).resonances.at(0).alpha);
    p.alpha = r.alpha;
    auto ic = build_interface(r, p.beta, p.Phi);
    CHECK(ic.theta == doctest::Approx(r.theta));
    auto s = limit_spectrum_resonant(p, ic, 0.0, 5000.0);
    REQUIRE(s.pairs.size() >= 3);
    const auto c = interface_matrix(ic);
    for (std::size_t i = 0; i < s.pairs.size(); ++i) {
        const auto& e = s.pairs[i];
        Eigen::Matrix<double, 8, 1> tau;
        tau << e.trace_left, e.trace_right;
        CHECK((c * tau).norm() < 1e-7 * tau.norm());
        CHECK(e.residual < 1e-5);
        for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(inner_product(e.y, s.pairs[j].y)) < 1e-7);
    }
}

TEST_CASE("degenerate resonance has no limit operator") {
    auto r = resonance_at(make_bump_shape({1.0}), 0.0);
    CHECK_THROWS_AS(build_interface(r, 1.0, make_bump_shape({1.0})), NotApplicableError);
    InterfaceConditions bad{LimitMode::Resonant, 0.0, 0.0};
    CHECK_THROWS_AS(interface_matrix(bad), NotApplicableError);
}
