#include "sbspec/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sbspec/errors.hpp"
#include "sbspec/problem.hpp"
#include "sbspec/roots.hpp"
#include "sbspec/shooting.hpp"

namespace sbspec {

namespace {

BvpSpec resonance_bvp(const ShapeFunction& psi, double alpha) {
    ScalarFn c = [&psi, alpha](double xi) { return alpha * psi(xi); };
    BvpSpec spec;
    spec.left = {Segment{-1.0, 0.0, c, 1.0}};
    spec.right = {Segment{1.0, 0.0, c, 1.0}};
    spec.left_start = boundary_basis(BoundaryKind::Free);
    spec.right_start = boundary_basis(BoundaryKind::Free);
    spec.interface.resize(4, 8);
    spec.interface << Eigen::Matrix4d::Identity(), -Eigen::Matrix4d::Identity();
    return spec;
}

// |Psi|^(1/4) has cusps at sign changes; a fixed composite rule is plenty for a step heuristic.
double phase_integral(const ShapeFunction& psi) {
    std::vector<double> br;
    for (int i = 0; i <= 200; ++i) br.push_back(-1.0 + i / 100.0);
    return integrate_between(br, [&psi](double xi) { return std::pow(std::abs(psi(xi)), 0.25); });
}

double wkb_step(double integral, double alpha) {
    const double alpha0 = std::pow(M_PI / integral, 4.0);
    return 0.125 * 4.0 * M_PI * std::pow(std::max(std::abs(alpha), alpha0), 0.75) / integral;
}

}  // namespace

double resonance_determinant(const ShapeFunction& psi, double alpha, const OdeOptions& opt) {
    ScalarFn c = [&psi, alpha](double xi) { return alpha * psi(xi); };
    const Matrix4 m = fundamental_matrix(c, -1.0, 1.0, opt).m;
    return m(2, 0) * m(3, 1) - m(2, 1) * m(3, 0);
}

double resonance_determinant_normalized(const ShapeFunction& psi, double alpha, const OdeOptions& opt) {
    return evaluate_bvp(resonance_bvp(psi, alpha), opt).value;
}

double resonance_scan_step(const ShapeFunction& psi, double alpha) {
    if (psi.is_zero()) return std::numeric_limits<double>::infinity();
    return wkb_step(phase_integral(psi), alpha);
}

ResonanceData resonance_at(const ShapeFunction& psi, double alpha, const ResonanceOptions& opt) {
    ResonanceData r;
    r.alpha = alpha;
    if (alpha == 0.0 || psi.is_zero()) {
        // linear functions: two-dimensional kernel
        r.multiplicity = 2;
        r.nondegenerate = false;
        r.theta = std::numeric_limits<double>::quiet_NaN();
        r.w = PiecewiseFunction({Piece{Trajectory({-1.0, 1.0}, {State(0, 1, 0, 0), State(2, 1, 0, 0)},
                                                  {0.0, 0.0}),
                                       1.0}});
        r.left_trace = State(0, 1, 0, 0);
        r.right_trace = State(2, 1, 0, 0);
        return r;
    }
    auto spec = resonance_bvp(psi, alpha);
    auto sol = solve_bvp_null(spec, opt.ode);
    r.determinant = sol.singular_values.prod();

    // one-sided free-end matrix for the multiplicity
    ScalarFn c = [&psi, alpha](double xi) { return alpha * psi(xi); };
    auto prop = propagate({Segment{-1.0, 1.0, c, 1.0}}, boundary_basis(BoundaryKind::Free), opt.ode);
    const Eigen::Matrix2d end = boundary_functionals(BoundaryKind::Free) * prop.q;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(end);
    r.multiplicity = svd.singularValues()(0) < opt.multiplicity_tol ? 2 : 1;

    PiecewiseFunction w = sol.y;
    w = w.scaled(1.0 / l2_norm(w));
    State left = w.state(-1.0), right = w.state(1.0, Side::Left);
    r.nondegenerate = r.multiplicity == 1 && std::abs(left(1) * right(1)) > opt.nondegeneracy_tol;
    if (std::abs(left(1)) > 1e-10) {
        const double s = 1.0 / left(1);
        w = w.scaled(s);
        left *= s;
        right *= s;
        r.theta = right(1);
    } else {
        r.theta = std::numeric_limits<double>::quiet_NaN();
    }
    r.w = std::move(w);
    r.left_trace = left;
    r.right_trace = right;
    return r;
}

ResonanceScan resonant_set(const ShapeFunction& psi, double lo, double hi, int max_count,
                           const ResonanceOptions& opt) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) throw DomainError("resonance window must be finite");
    ResonanceScan out;
    if (lo <= 0.0 && 0.0 <= hi) out.resonances.push_back(resonance_at(psi, 0.0, opt));
    if (psi.is_zero()) return out;

    auto f = [&](double a) { return resonance_determinant_normalized(psi, a, opt.ode); };
    const double integral = phase_integral(psi);
    auto grid = adaptive_grid(lo, hi, [&](double a) { return wkb_step(integral, a); });
    auto scan = scan_roots(f, grid);
    out.warnings = scan.warnings;

    // the trivial double root at 0 is a tangency; drop anything the scan reports there
    const double zero_band = 1e-6 * wkb_step(integral, 0.0);
    std::vector<double> roots;
    for (const auto& r : scan.roots) {
        if (std::abs(r.x) <= zero_band) continue;
        if (std::abs(r.value) > opt.root_tol) {
            out.warnings.push_back("resonance near " + std::to_string(r.x) + " refined only to |D|=" +
                                   std::to_string(std::abs(r.value)));
        }
        roots.push_back(r.x);
    }
    std::sort(roots.begin(), roots.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (static_cast<int>(roots.size()) > max_count) roots.resize(max_count);
    for (double a : roots) out.resonances.push_back(resonance_at(psi, a, opt));
    std::sort(out.resonances.begin(), out.resonances.end(),
              [](const ResonanceData& a, const ResonanceData& b) { return a.alpha < b.alpha; });
    return out;
}

double theta(const ResonanceData& r) {
    if (!r.nondegenerate) throw NotApplicableError("theta is undefined for a degenerate resonance");
    return r.right_trace(1) / r.left_trace(1);
}

double functional_quadratic_phi(const ShapeFunction& phi, const PiecewiseFunction& f) {
    if (phi.is_zero()) return 0.0;
    std::vector<double> br;
    for (double x : f.breakpoints()) {
        if (x >= -1.0 && x <= 1.0) br.push_back(x);
    }
    return integrate_between(br, [&](double xi) {
        const double v = f.eval(xi);
        return phi(xi) * v * v;
    });
}

double functional_linear_upsilon(const ShapeFunction& upsilon, const PiecewiseFunction& f) {
    if (upsilon.is_zero()) return 0.0;
    std::vector<double> br;
    for (double x : f.breakpoints()) {
        if (x >= -1.0 && x <= 1.0) br.push_back(x);
    }
    return integrate_between(br, [&](double xi) { return upsilon(xi) * f.eval(xi); });
}

}  // namespace sbspec
