// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "oracles/beam.hpp"
#include "oracles/fd_resonance.hpp"
#include "sbspec/asymptotics.hpp"
#include "sbspec/errors.hpp"
#include "sbspec/fit.hpp"

using namespace sbspec;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool ok = true;
    std::string detail;
    void require(bool cond, const std::string& what) {
        if (!cond) ok = false;
        if (!detail.empty()) detail += "; ";
        detail += what + (cond ? "" : " [failed]");
    }
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

double nearest(const std::vector<double>& v, double x) {
    return *std::min_element(v.begin(), v.end(), [x](double a, double b) { return std::abs(a - x) < std::abs(b - x); });
}

ShapeFunction odd_bump() { return make_bump_shape({0.0, 1.0}); }
ShapeFunction even_bump() { return make_bump_shape({1.0}); }

Verdict fd_equivalence() {
    Verdict v;
    for (int s = 0; s < 2; ++s) {
        const auto psi = s == 0 ? odd_bump() : even_bump();
        const auto t0 = Clock::now();
        auto scan = resonant_set(psi, -1e6, 1e6, 6);
        const double t_shoot = seconds_since(t0);
        std::vector<double> alphas;
        for (const auto& r : scan.resonances)
            if (r.alpha != 0.0) alphas.push_back(r.alpha);
        if (alphas.size() > 5) alphas.resize(5);
        auto fd = oracle::fd_resonances_extrapolated([&](double x) { return psi(x); }, 160, 6);
        double worst = 0.0;
        for (double a : alphas) worst = std::max(worst, std::abs(nearest(fd, a) - a) / std::abs(a));
        const std::string name = s == 0 ? "xi*b" : "b";
        v.require(alphas.size() == 5, name + ": " + std::to_string(alphas.size()) + " resonances");
        v.require(worst <= 1e-6, name + ": max rel diff " + fmt("%.2e", worst));
        v.require(t_shoot < 10.0, name + ": shooting " + fmt("%.2f s", t_shoot));
    }
    return v;
}

Verdict trivial_resonance() {
    Verdict v;
    const std::vector<std::pair<std::string, ShapeFunction>> battery{
        {"b", even_bump()},
        {"xi*b", odd_bump()},
        {"(1-3xi^2)b", make_bump_shape({1.0, 0.0, -3.0})},
        {"b'", make_bump_shape({1.0}, 1)},
        {"(1+xi)b", make_bump_shape({1.0, 1.0})}};
    for (const auto& [name, psi] : battery) {
        const double d = resonance_determinant(psi, 0.0);
        auto r = resonance_at(psi, 0.0);
        v.require(std::abs(d) < 1e-12 && r.multiplicity == 2 && !r.nondegenerate,
                  name + ": D(0)=" + fmt("%.1e", d) + " mult " + std::to_string(r.multiplicity));
    }
    return v;
}

Verdict two_sided_growth() {
    Verdict v;
    const auto t0 = Clock::now();
    double prev_lo = 0.0, prev_hi = 0.0;
    for (double w : {1e4, 1e5, 1e6}) {
        auto scan = resonant_set(odd_bump(), -w, w);
        double lo = 0.0, hi = 0.0;
        for (const auto& r : scan.resonances) {
            lo = std::min(lo, r.alpha);
            hi = std::max(hi, r.alpha);
        }
        v.require(lo < prev_lo && hi > prev_hi, "window " + fmt("%.0e", w) + ": extremes " + fmt("%.4g", lo) + " / " +
                                                     fmt("%.4g", hi));
        prev_lo = lo;
        prev_hi = hi;
    }
    auto pos = resonant_set(even_bump(), -2e5, 2e5);
    int positive = 0, negative = 0;
    for (const auto& r : pos.resonances) {
        positive += r.alpha > 0.0;
        negative += r.alpha < 0.0;
    }
    v.require(positive == 0 && negative > 0, "positive profile: " + std::to_string(positive) + " positive, " +
                                                 std::to_string(negative) + " negative");
    const double t = seconds_since(t0);
    v.require(t < 30.0, fmt("%.1f s", t));
    return v;
}

Verdict divergent_branch() {
    Verdict v;
    const auto t0 = Clock::now();
    Problem p;
    p.alpha = 300.0;
    p.Psi = odd_bump();
    auto probe = divergent_branch_probe(p, {0.1, 0.05, 0.025, 0.0125, 0.00625});
    bool negative = true, same_count = true;
    for (const auto& r : probe.rows) {
        negative = negative && r.scaled_lambda1 < 0.0;
        same_count = same_count && r.negative_count == probe.rows.front().negative_count;
    }
    const auto n = probe.rows.size();
    const double c1 = -probe.rows[n - 1].scaled_lambda1, c0 = -probe.rows[n - 2].scaled_lambda1;
    const double drift = std::abs(c1 - c0) / c1;
    v.require(negative, "eps^4 lambda1 < 0 for all eps, c=" + fmt("%.4g", c1));
    v.require(drift <= 0.2, "drift " + fmt("%.3f", drift));
    v.require(same_count && probe.rows.front().negative_count > 0,
              "negative count " + std::to_string(probe.rows.front().negative_count));
    const double t = seconds_since(t0);
    v.require(t < 60.0, fmt("%.1f s", t));
    return v;
}

const std::vector<double> kEps{0.1, 0.05, 0.025, 0.0125, 0.00625};

Verdict nonresonant_convergence() {
    Verdict v;
    const auto t0 = Clock::now();
    Problem p;
    p.alpha = 1000.0;
    p.beta = 1.0;
    p.Psi = even_bump();
    p.Phi = odd_bump();
    v.require(std::abs(resonance_determinant_normalized(p.Psi, p.alpha)) > 1e-3, "alpha = 1000 off the resonant set");
    auto lim = limit_spectrum_nonresonant(p, 0.0, 1000.0);
    const double lambda = lim.pairs.front().lambda;
    const double k1 = oracle::clamped_beam_k(1);
    const double ref = std::pow(k1, 4);
    v.require(std::abs(lambda - ref) <= 1e-6 * ref, "limit " + fmt("%.8f", lambda) + " vs k1^4 " + fmt("%.8f", ref));
    std::vector<std::pair<double, double>> rows;
    for (double eps : kEps) {
        auto s = perturbed_spectrum(p, eps, 0.0, 1000.0, 1);
        rows.emplace_back(eps, std::abs(s.pairs.front().lambda - lambda));
    }
    const double slope = fit_rate(rows).slope;
    v.require(slope >= 0.8 && slope <= 1.5, "slope " + fmt("%.3f", slope));
    const double t = seconds_since(t0);
    v.require(t < 60.0, fmt("%.1f s", t));
    return v;
}

struct ResonantCase {
    Problem p;
    ResonanceData r;
    InterfaceConditions ic;
};

ResonantCase resonant_case(double gamma1 = 0.0, double gamma2 = 0.0) {
    ResonantCase c;
    c.p.Psi = odd_bump();
    c.p.Phi = even_bump();
    c.p.Upsilon1 = even_bump();
    c.p.Upsilon2 = odd_bump();
    c.p.beta = 1.0;
    c.p.gamma1 = gamma1;
    c.p.gamma2 = gamma2;
    auto scan = resonant_set(c.p.Psi, -5000.0, 5000.0);
    for (const auto& r : scan.resonances)
        if (r.alpha != 0.0 && r.multiplicity == 1 && r.nondegenerate) {
            c.r = r;
            break;
        }
    c.p.alpha = c.r.alpha;
    c.ic = build_interface(c.r, c.p.beta, c.p.Phi);
    return c;
}

std::shared_ptr<const CorrectorSet> resonant_correctors(const ResonantCase& c) {
    auto pair = limit_spectrum_resonant(c.p, c.ic, 0.0, 600.0).pairs.front();
    return std::make_shared<const CorrectorSet>(correctors_resonant(c.p, c.r, c.ic, pair));
}

std::shared_ptr<const CorrectorSet> nonresonant_correctors() {
    Problem p;
    p.b = 1.3;
    p.alpha = 1000.0;
    p.beta = 1.0;
    p.Psi = odd_bump();
    p.Phi = even_bump();
    auto pair = limit_spectrum_nonresonant(p, 0.0, 600.0).pairs.front();
    return std::make_shared<const CorrectorSet>(correctors_nonresonant(p, pair));
}

Verdict resonant_convergence(const ResonantCase& c, const AccuracyReport& acc) {
    Verdict v;
    v.require(true, "alpha " + fmt("%.10g", c.p.alpha));
    v.require(acc.slope_limit >= 0.8, "slope " + fmt("%.3f", acc.slope_limit));
    auto decoupled = limit_spectrum_nonresonant(c.p, 0.0, 5000.0);
    std::vector<double> dl;
    for (const auto& e : decoupled.pairs) dl.push_back(e.lambda);
    const auto& last = acc.rows.back();
    const double d_dec = std::abs(nearest(dl, last.lambda_eps) - last.lambda_eps);
    v.require(d_dec >= 10.0 * last.error_limit,
              "distance to decoupled " + fmt("%.4g", d_dec) + " vs resonant " + fmt("%.4g", last.error_limit));
    return v;
}

void corrector_consistency(Verdict& v, const std::string& name, const CorrectorSet& cs, const AccuracyReport& acc) {
    const auto it = std::find_if(acc.rows.begin(), acc.rows.end(), [](const AccuracyRow& r) { return r.eps == 0.0125; });
    const double q = (it->lambda_eps - cs.lambda0) / it->eps;
    const double rel = std::abs(q - cs.lambda1) / std::abs(cs.lambda1);
    v.require(rel <= 0.1, name + ": (lambda^eps-lambda)/eps " + fmt("%.4g", q) + " vs lambda1 " +
                              fmt("%.4g", cs.lambda1) + " (" + fmt("%.1f%%", 100 * rel) + ")");
    v.require(acc.slope_first >= 1.6, name + ": second-order slope " + fmt("%.3f", acc.slope_first));
}

Verdict quasimode_orders(const AccuracyReport& acc) {
    Verdict v;
    const int expect[4] = {3, 3, 3, 2};
    for (int k = 0; k < 4; ++k) {
        const double l = acc.jump_slopes_left[k], r = acc.jump_slopes_right[k];
        v.require(std::abs(l - expect[k]) <= 0.4 && std::abs(r - expect[k]) <= 0.4,
                  "jump d" + std::to_string(k) + " " + fmt("%.2f", l) + "/" + fmt("%.2f", r));
    }
    v.require(acc.slope_eigfun >= 0.8, "nonresonant configuration, eigenfunction slope " + fmt("%.3f", acc.slope_eigfun));
    return v;
}

Verdict gamma_invariance() {
    Verdict v;
    const std::vector<double> eps{0.025, 0.0125, 0.00625};
    std::vector<Extrapolation> limits;
    for (double g1 : {-5.0, 0.0, 5.0})
        for (double g2 : {-5.0, 0.0, 5.0}) {
            auto cs = resonant_correctors(resonant_case(g1, g2));
            auto acc = quasimode_accuracy(cs, eps);
            std::vector<std::pair<double, double>> rows;
            for (const auto& r : acc.rows) rows.emplace_back(r.eps, r.lambda_eps);
            limits.push_back(extrapolate_to_zero(rows));
        }
    double worst = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < limits.size(); ++i)
        for (std::size_t j = i + 1; j < limits.size(); ++j) {
            const double d = std::abs(limits[i].value - limits[j].value);
            ok = ok && d <= limits[i].error + limits[j].error;
            worst = std::max(worst, d / (limits[i].error + limits[j].error));
        }
    double lo = limits.front().value, hi = lo;
    for (const auto& l : limits) {
        lo = std::min(lo, l.value);
        hi = std::max(hi, l.value);
    }
    v.require(ok, "limits in [" + fmt("%.6f", lo) + ", " + fmt("%.6f", hi) + "], worst difference/estimate " +
                      fmt("%.2e", worst));
    return v;
}

Verdict property_suites() {
    Verdict v;
    const std::vector<std::pair<std::string, std::string>> suites{
        {"odecore", SBSPEC_TEST_ODE}, {"shapes", SBSPEC_TEST_SHAPES}, {"limit", SBSPEC_TEST_LIMIT}};
    for (const auto& [name, exe] : suites) {
        const auto t0 = Clock::now();
        const int rc = std::system((exe + " > /dev/null 2>&1").c_str());
        const double t = seconds_since(t0);
        v.require(rc == 0 && t < 10.0, name + (rc == 0 ? " ok " : " failing ") + fmt("%.2f s", t));
    }
    return v;
}

int report(int id, const std::function<Verdict()>& run) {
    Verdict v;
    try {
        v = run();
    } catch (const std::exception& e) {
        v.ok = false;
        v.detail = std::string("error: ") + e.what();
    }
    std::printf("%s criterion %d: %s\n", v.ok ? "PASS" : "FAIL", id, v.detail.c_str());
    std::fflush(stdout);
    return v.ok ? 0 : 1;
}

}  // namespace

int main() {
    int failures = 0;
    failures += report(1, fd_equivalence);
    failures += report(2, trivial_resonance);
    failures += report(3, two_sided_growth);
    failures += report(4, divergent_branch);
    failures += report(5, nonresonant_convergence);

    std::shared_ptr<const CorrectorSet> res_cs, nr_cs;
    AccuracyReport res_acc, nr_acc;
    ResonantCase rc;
    std::string setup_error;
    try {
        rc = resonant_case();
        res_cs = resonant_correctors(rc);
        res_acc = quasimode_accuracy(res_cs, kEps);
        nr_cs = nonresonant_correctors();
        nr_acc = quasimode_accuracy(nr_cs, kEps);
    } catch (const std::exception& e) {
        setup_error = e.what();
    }
    auto needs_setup = [&](const std::function<Verdict()>& f) {
        return [&, f] {
            if (!setup_error.empty()) throw Error(setup_error);
            return f();
        };
    };
    failures += report(6, needs_setup([&] { return resonant_convergence(rc, res_acc); }));
    failures += report(7, needs_setup([&] {
                           Verdict v;
                           corrector_consistency(v, "nonresonant", *nr_cs, nr_acc);
                           corrector_consistency(v, "resonant", *res_cs, res_acc);
                           return v;
                       }));
    failures += report(8, needs_setup([&] { return quasimode_orders(nr_acc); }));
    failures += report(9, gamma_invariance);
    failures += report(10, property_suites);
    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
