#include <doctest.h>

#include <cmath>
#include <memory>

#include "sbspec/asymptotics.hpp"
#include "sbspec/errors.hpp"

using namespace sbspec;

namespace {

Problem resonant_problem(double beta, double gamma1 = 0.0, double gamma2 = 0.0) {
    Problem p;
    p.Psi = make_bump_shape({0.0, 1.0});
    p.Phi = make_bump_shape({1.0});
    p.Upsilon1 = make_bump_shape({1.0, 0.5});
    p.Upsilon2 = make_bump_shape({0.0, 1.0});
    p.beta = beta;
    p.gamma1 = gamma1;
    p.gamma2 = gamma2;
    return p;
}

struct ResonantSetup {
    Problem p;
    ResonanceData r;
    InterfaceConditions ic;
    Eigenpair pair;
};

ResonantSetup resonant_setup(double beta, double gamma1 = 0.0, double gamma2 = 0.0) {
    ResonantSetup s;
    s.p = resonant_problem(beta, gamma1, gamma2);
    s.r = resonant_set(s.p.Psi, 2000.0, 2500.0).resonances.at(0);
    s.p.alpha = s.r.alpha;
    s.ic = build_interface(s.r, beta, s.p.Phi);
    s.pair = limit_spectrum_resonant(s.p, s.ic, 0.0, 300.0).pairs.at(0);
    return s;
}

Problem nonresonant_problem() {
    Problem p;
    p.b = 1.3;
    p.alpha = 1000.0;
    p.beta = 1.0;
    p.gamma1 = 2.0;
    p.Psi = make_bump_shape({0.0, 1.0});
    p.Phi = make_bump_shape({1.0});
    p.Upsilon1 = make_bump_shape({1.0});
    return p;
}

double perturbed_near(const Problem& p, double eps, double target) {
    auto s = perturbed_spectrum(p, eps, target - 40.0, target + 40.0);
    REQUIRE(!s.pairs.empty());
    double best = s.pairs.front().lambda;
    for (const auto& e : s.pairs)
        if (std::abs(e.lambda - target) < std::abs(best - target)) best = e.lambda;
    return best;
}

}  // namespace

TEST_CASE("obstruction of the trivial problem vanishes") {
    auto w = resonance_at(make_bump_shape({1.0}), -346.20041798679).w;
    CHECK(solvability_project(nullptr, w, {}) == 0.0);
}

TEST_CASE("first inner problem is solvable exactly for the limit eigenfunction data") {
    auto s = resonant_setup(1.0);
    const PiecewiseFunction wa = s.r.w;
    const State vm = s.pair.trace_left, vp = s.pair.trace_right;
    ScalarFn f = [&](double xi) { return -s.p.beta * vm(1) * s.p.Phi(xi) * wa.eval(xi); };
    const InnerBoundaryData d{vm(2), 0.0, vp(2), 0.0};
    CHECK(std::abs(solvability_project(f, wa, d)) < 1e-7);
    CHECK_NOTHROW(solve_inner_problem(s.p.Psi, s.p.alpha, f, d, true));

    InnerBoundaryData off = d;
    off.b2 += 0.3;
    CHECK(std::abs(solvability_project(f, wa, off)) > 1e-3);
    CHECK_THROWS_AS(solve_inner_problem(s.p.Psi, s.p.alpha, f, off, true), InconsistencyError);
}

TEST_CASE("nonresonant correctors") {
    const Problem p = nonresonant_problem();
    auto lim = limit_spectrum_nonresonant(p, 0.0, 300.0);
    REQUIRE(lim.pairs.size() == 1);
    auto cs = correctors_nonresonant(p, lim.pairs[0]);
    CHECK(cs.kind == CorrectorCase::Nonresonant);
    // v lives on the longer half
    CHECK(cs.v.eval(-0.5) == 0.0);
    for (double xi : {-0.9, -0.3, 0.2, 0.8}) CHECK(cs.w.eval(xi) == 0.0);
    CHECK(std::abs(cs.lambda1 - cs.lambda1_printed) <= 1e-6 * std::abs(cs.lambda1));
    CHECK(std::abs(cs.lambda2 - cs.lambda2_printed) <= 1e-6 * std::abs(cs.lambda2));
    CHECK(std::abs(cs.lambda1 - cs.lambda1_shooting) <= 1e-6 * std::abs(cs.lambda1));
    CHECK(std::abs(cs.lambda2 - cs.lambda2_shooting) <= 1e-6 * std::abs(cs.lambda2));
    CHECK(cs.orthogonality < 1e-7);
    CHECK(cs.max_residual < 1e-6);

    const double eps = 0.01;
    const double le = perturbed_near(p, eps, cs.lambda0 + eps * cs.lambda1);
    CHECK(std::abs((le - cs.lambda0) / eps - cs.lambda1) <= 0.1 * std::abs(cs.lambda1));
}

TEST_CASE("nonresonant construction refuses multiple eigenvalues and resonant alpha") {
    Problem p = nonresonant_problem();
    p.b = 1.0;
    auto lim = limit_spectrum_nonresonant(p, 0.0, 600.0);
    REQUIRE(lim.pairs.front().multiple);
    CHECK_THROWS_AS(correctors_nonresonant(p, lim.pairs.front()), NotApplicableError);
    p.b = 1.3;
    p.alpha = 0.0;
    auto lim2 = limit_spectrum_nonresonant(p, 0.0, 300.0);
    CHECK_THROWS_AS(correctors_nonresonant(p, lim2.pairs.front()), NotApplicableError);
}

TEST_CASE("resonant correctors") {
    auto s = resonant_setup(1.0, 2.0, -3.0);
    auto cs = correctors_resonant(s.p, s.r, s.ic, s.pair);
    CHECK(cs.kind == CorrectorCase::Resonant);
    CHECK(cs.matching_check < 1e-6);
    CHECK(cs.max_obstruction < 1e-6);
    CHECK(cs.orthogonality < 1e-7);
    CHECK(cs.max_residual < 1e-6);
    CHECK(std::abs(cs.lambda1 - cs.lambda1_shooting) <= 1e-6 * std::abs(cs.lambda1));
    CHECK(std::abs(cs.lambda2 - cs.lambda2_shooting) <= 1e-6 * std::abs(cs.lambda2));
    // closed forms with the Phi-weighted functionals
    CHECK(std::abs(cs.lambda1 - cs.lambda1_printed) <= 1e-6 * std::abs(cs.lambda1));
    CHECK(std::abs(cs.lambda2 - cs.lambda2_printed) <= 1e-6 * std::abs(cs.lambda2));
    // inner leading term and gauge
    const double cw = s.pair.trace_left(1);
    CHECK(cs.w.eval(-1.0, 1) == doctest::Approx(cw).epsilon(1e-9));
    CHECK(cs.w1.eval(-1.0, 1) == doctest::Approx(cs.c1).epsilon(1e-9));
    CHECK(cs.w2.eval(-1.0, 1) == doctest::Approx(cs.c2).epsilon(1e-9));
    CHECK(std::abs(cs.w3.eval(-1.0, 1)) < 1e-9);
}

TEST_CASE("second-order consistency of the resonant expansion") {
    auto s = resonant_setup(1.0);
    auto cs = correctors_resonant(s.p, s.r, s.ic, s.pair);
    const double eps = 0.00625;
    const double le = perturbed_near(s.p, eps, cs.lambda0 + eps * cs.lambda1);
    const double second = (le - cs.lambda0 - eps * cs.lambda1) / (eps * eps);
    CHECK(std::abs(second - cs.lambda2) <= 0.05 * std::abs(cs.lambda2));
}

TEST_CASE("without the first-order shapes the solvability data reduce to trace terms") {
    Problem p;
    p.Psi = make_bump_shape({0.0, 1.0});
    auto r = resonant_set(p.Psi, 2000.0, 2500.0).resonances.at(0);
    p.alpha = r.alpha;
    auto ic = build_interface(r, 0.0, p.Phi);
    CHECK(ic.kappa == 0.0);
    auto pair = limit_spectrum_resonant(p, ic, 0.0, 300.0).pairs.at(0);
    auto cs = correctors_resonant(p, r, ic, pair);
    const State wl = r.left_trace, wr = r.right_trace;
    const State vm = pair.trace_left, vp = pair.trace_right;
    const double h1 = (wr(0) - ic.theta) * vp(3) - (wl(0) + 1.0) * vm(3);
    CHECK(cs.order1.H == doctest::Approx(h1).epsilon(1e-7));
    CHECK(cs.lambda1 == doctest::Approx(cs.lambda1_printed).epsilon(1e-7));
    CHECK(cs.lambda1 == doctest::Approx(cs.lambda1_printed_literal).epsilon(1e-7));
}

TEST_CASE("gamma couplings: limit independent, first correction only through gamma1") {
    auto base = resonant_setup(1.0);
    auto cs0 = correctors_resonant(base.p, base.r, base.ic, base.pair);
    auto g2 = resonant_setup(1.0, 0.0, 5.0);
    auto cs2 = correctors_resonant(g2.p, g2.r, g2.ic, g2.pair);
    auto g1 = resonant_setup(1.0, 5.0, 0.0);
    auto cs1 = correctors_resonant(g1.p, g1.r, g1.ic, g1.pair);
    CHECK(cs2.lambda0 == doctest::Approx(cs0.lambda0).epsilon(1e-12));
    CHECK(cs1.lambda0 == doctest::Approx(cs0.lambda0).epsilon(1e-12));
    CHECK(cs2.lambda1 == doctest::Approx(cs0.lambda1).epsilon(1e-9));
    // gamma1 enters lambda1 through gamma1 v'(-0)^2 int Ups1 w_alpha^2
    const PiecewiseFunction wa = base.r.w;
    const double ups = integrate_between(merge_breakpoints(wa.breakpoints(), {}), [&](double xi) {
        return base.p.Upsilon1(xi) * wa.eval(xi) * wa.eval(xi);
    });
    const double cw = base.pair.trace_left(1);
    CHECK(cs1.lambda1 - cs0.lambda1 == doctest::Approx(5.0 * cw * cw * ups).epsilon(1e-6));
}

TEST_CASE("quasimode assembly") {
    auto s = resonant_setup(1.0);
    auto cs = std::make_shared<const CorrectorSet>(correctors_resonant(s.p, s.r, s.ic, s.pair));
    auto q0 = assemble_quasimode(cs, 0.0);
    CHECK(q0.Lambda() == cs->lambda0);
    for (double x : {-0.7, -1e-3, 0.2, 0.9}) CHECK(q0.eval(x) == cs->v.eval(x));
    const double eps = 0.05;
    auto q = assemble_quasimode(cs, eps);
    CHECK(q.Lambda() == doctest::Approx(cs->lambda0 + eps * cs->lambda1 + eps * eps * cs->lambda2));
    // jumps are outer minus inner
    CHECK(q.jump_right()[0] ==
          doctest::Approx(q.eval(eps, 0, Side::Right) - q.eval(eps, 0, Side::Left)).epsilon(1e-12));
    CHECK_THROWS_AS(assemble_quasimode(cs, -0.1), DomainError);
}
