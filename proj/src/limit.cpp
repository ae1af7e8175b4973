#include "sbspec/limit.hpp"

#include <algorithm>
#include <cmath>

#include "sbspec/errors.hpp"
#include "sbspec/roots.hpp"

namespace sbspec {

namespace {

BvpSpec half_bvp(const Problem& p, int side, double lambda) {
    p.validate();
    ScalarFn outer = [&p, lambda](double x) { return p.background(x) - lambda; };
    BvpSpec spec;
    if (side < 0) {
        spec.left = {Segment{p.a, 0.0, outer, 1.0}};
        spec.left_start = boundary_basis(p.left);
    } else {
        spec.left = {Segment{p.b, 0.0, outer, 1.0}};
        spec.left_start = boundary_basis(p.right);
    }
    spec.interface = boundary_functionals(BoundaryKind::Clamped);
    return spec;
}

Piece zero_piece(double x0, double x1) {
    return Piece{Trajectory({x0, x1}, {State::Zero(), State::Zero()}, {0.0, 0.0}), 1.0};
}

PiecewiseFunction normalized_oriented(const PiecewiseFunction& y) {
    PiecewiseFunction z = y.scaled(1.0 / l2_norm(y));
    double best = 0.0;
    for (double x : z.breakpoints()) {
        const double v = z.eval(x);
        if (std::abs(v) > std::abs(best)) best = v;
    }
    return best < 0.0 ? z.scaled(-1.0) : z;
}

double outer_residual(const Problem& p, const PiecewiseFunction& y, double lambda) {
    return plug_back_residual(y, [&](const Piece&, double x) { return p.background(x) - lambda; });
}

}  // namespace

InterfaceConditions build_interface(const ResonanceData& r, double beta, const ShapeFunction& phi) {
    if (!r.nondegenerate) throw NotApplicableError("limit operator is undefined at a degenerate resonance");
    InterfaceConditions ic;
    ic.mode = LimitMode::Resonant;
    ic.theta = theta(r);
    if (ic.theta == 0.0) throw NotApplicableError("theta vanishes; interface is invalid");
    const PiecewiseFunction w = r.w.scaled(1.0 / r.left_trace(1));
    ic.kappa = beta == 0.0 ? 0.0 : beta * functional_quadratic_phi(phi, w);
    return ic;
}

Eigen::Matrix<double, 4, 8> interface_matrix(const InterfaceConditions& ic) {
    Eigen::Matrix<double, 4, 8> c = Eigen::Matrix<double, 4, 8>::Zero();
    if (ic.mode == LimitMode::Nonresonant) {
        c(0, 0) = 1.0;
        c(1, 1) = 1.0;
        c(2, 4) = 1.0;
        c(3, 5) = 1.0;
        return c;
    }
    if (ic.theta == 0.0) throw NotApplicableError("theta vanishes; interface is invalid");
    c(0, 0) = 1.0;
    c(1, 4) = 1.0;
    c(2, 5) = 1.0;
    c(2, 1) = -ic.theta;
    c(3, 6) = ic.theta;
    c(3, 2) = -1.0;
    c(3, 1) = -ic.kappa;
    return c;
}

double half_determinant(const Problem& p, int side, double lambda, const OdeOptions& opt) {
    return evaluate_bvp(half_bvp(p, side, lambda), opt).value;
}

Eigenpair limit_eigenpair_half(const Problem& p, int side, double lambda, const SpectrumOptions& opt) {
    auto sol = solve_bvp_null(half_bvp(p, side, lambda), opt.ode, opt.multiplicity_tol);
    std::vector<Piece> pieces = sol.y.pieces();
    pieces.push_back(side < 0 ? zero_piece(0.0, p.b) : zero_piece(p.a, 0.0));
    Eigenpair e;
    e.lambda = lambda;
    e.multiple = sol.multiple;
    e.y = normalized_oriented(PiecewiseFunction(std::move(pieces)));
    e.l2norm = l2_norm(e.y);
    e.trace_left = e.y.state(0.0, Side::Left);
    e.trace_right = e.y.state(0.0, Side::Right);
    if (opt.compute_residual) e.residual = outer_residual(p, e.y, lambda);
    return e;
}

SpectrumResult limit_spectrum_nonresonant(const Problem& p, double lo, double hi, int max_count,
                                          const SpectrumOptions& opt) {
    SpectrumResult out;
    struct Found {
        double lambda;
        int side;
    };
    std::vector<Found> found;
    for (int side : {-1, 1}) {
        const double length = side < 0 ? -p.a : p.b;
        auto grid = adaptive_grid(lo, hi, [&](double l) { return lambda_scan_step(length, l); });
        auto scan = scan_roots([&](double l) { return half_determinant(p, side, l, opt.ode); }, grid);
        out.warnings.insert(out.warnings.end(), scan.warnings.begin(), scan.warnings.end());
        for (const auto& r : scan.roots) found.push_back({r.x, side});
    }
    std::sort(found.begin(), found.end(), [](const Found& a, const Found& b) { return a.lambda < b.lambda; });
    for (std::size_t i = 0; i < found.size() && static_cast<int>(out.pairs.size()) < max_count; ++i) {
        auto e = limit_eigenpair_half(p, found[i].side, found[i].lambda, opt);
        const double tol = 1e-9 * (1.0 + std::abs(found[i].lambda));
        const bool prev = i > 0 && std::abs(found[i].lambda - found[i - 1].lambda) <= tol;
        const bool next = i + 1 < found.size() && std::abs(found[i + 1].lambda - found[i].lambda) <= tol;
        e.multiple = e.multiple || prev || next;
        out.pairs.push_back(std::move(e));
    }
    return out;
}

BvpSpec resonant_limit_bvp(const Problem& p, const InterfaceConditions& ic, double lambda) {
    p.validate();
    ScalarFn outer = [&p, lambda](double x) { return p.background(x) - lambda; };
    BvpSpec spec;
    spec.left = {Segment{p.a, 0.0, outer, 1.0}};
    spec.right = {Segment{p.b, 0.0, outer, 1.0}};
    spec.left_start = boundary_basis(p.left);
    spec.right_start = boundary_basis(p.right);
    spec.interface = interface_matrix(ic);
    return spec;
}

double resonant_limit_determinant(const Problem& p, const InterfaceConditions& ic, double lambda,
                                  const OdeOptions& opt) {
    return evaluate_bvp(resonant_limit_bvp(p, ic, lambda), opt).value;
}

Eigenpair limit_eigenpair_resonant(const Problem& p, const InterfaceConditions& ic, double lambda,
                                   const SpectrumOptions& opt) {
    auto sol = solve_bvp_null(resonant_limit_bvp(p, ic, lambda), opt.ode, opt.multiplicity_tol);
    Eigenpair e;
    e.lambda = lambda;
    e.multiple = sol.multiple;
    e.y = normalized_oriented(sol.y);
    e.l2norm = l2_norm(e.y);
    e.trace_left = e.y.state(0.0, Side::Left);
    e.trace_right = e.y.state(0.0, Side::Right);
    if (opt.compute_residual) e.residual = outer_residual(p, e.y, lambda);
    return e;
}

SpectrumResult limit_spectrum_resonant(const Problem& p, const InterfaceConditions& ic, double lo, double hi,
                                       int max_count, const SpectrumOptions& opt) {
    if (ic.mode != LimitMode::Resonant) throw NotApplicableError("interface conditions are not resonant");
    const double length = p.b - p.a;
    auto grid = adaptive_grid(lo, hi, [&](double l) { return lambda_scan_step(length, l); });
    auto scan = scan_roots([&](double l) { return resonant_limit_determinant(p, ic, l, opt.ode); }, grid);
    SpectrumResult out;
    out.warnings = scan.warnings;
    for (const auto& r : scan.roots) {
        if (static_cast<int>(out.pairs.size()) >= max_count) break;
        auto e = limit_eigenpair_resonant(p, ic, r.x, opt);
        if (e.multiple) out.warnings.push_back("limit eigenvalue " + std::to_string(r.x) + " is numerically multiple");
        out.pairs.push_back(std::move(e));
    }
    return out;
}

}  // namespace sbspec
