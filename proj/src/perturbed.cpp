#include "sbspec/perturbed.hpp"

#include <algorithm>
#include <cmath>

#include "sbspec/errors.hpp"
#include "sbspec/roots.hpp"

namespace sbspec {

namespace {

bool is_inner(const Piece& pc, double eps) { return pc.scale == eps && pc.x_begin() >= -eps && pc.x_end() <= eps; }

// Deterministic sign: the largest node value is positive.
PiecewiseFunction orient(const PiecewiseFunction& y) {
    double best = 0.0;
    for (double x : y.breakpoints()) {
        const double v = y.eval(x);
        if (std::abs(v) > std::abs(best)) best = v;
    }
    return best < 0.0 ? y.scaled(-1.0) : y;
}

}  // namespace

BvpSpec perturbed_bvp(const Problem& p, double eps, double lambda) {
    p.validate();
    check_eps(p, eps);
    ScalarFn outer = [&p, lambda](double x) { return p.background(x) - lambda; };
    ScalarFn inner = [&p, eps, lambda](double xi) { return inner_coefficient(p, eps, lambda, xi); };
    BvpSpec spec;
    spec.left = {Segment{p.a, -eps, outer, 1.0}, Segment{-1.0, 0.0, inner, eps}};
    spec.right = {Segment{p.b, eps, outer, 1.0}, Segment{1.0, 0.0, inner, eps}};
    spec.left_start = boundary_basis(p.left);
    spec.right_start = boundary_basis(p.right);
    spec.interface.resize(4, 8);
    spec.interface << Eigen::Matrix4d::Identity(), -Eigen::Matrix4d::Identity();
    return spec;
}

double perturbed_determinant(const Problem& p, double eps, double lambda, const OdeOptions& opt) {
    return evaluate_bvp(perturbed_bvp(p, eps, lambda), opt).value;
}

double lambda_scan_step(double length, double lambda) {
    const double lambda0 = std::pow(M_PI / length, 4.0);
    return 0.125 * 4.0 * M_PI * std::pow(std::max(std::abs(lambda), lambda0), 0.75) / length;
}

double plug_back_residual(const PiecewiseFunction& y, const std::function<double(const Piece&, double)>& coeff) {
    // group pieces sharing a coordinate scale into regions
    std::vector<std::vector<const Piece*>> regions;
    for (const auto& pc : y.pieces()) {
        if (regions.empty() || regions.back().front()->scale != pc.scale) regions.emplace_back();
        regions.back().push_back(&pc);
    }
    std::vector<double> res2(regions.size(), 0.0);
    double norm2_x = 0.0;  // ||y||^2 over (a,b) in x
    for (std::size_t k = 0; k < regions.size(); ++k) {
        for (const Piece* pc : regions[k]) {
            const auto& tr = pc->traj;
            const double len = tr.t_end() - tr.t_begin();
            const double h = std::min(1e-3, len / 8.0);
            const auto& nodes = tr.nodes();
            for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
                const double t = 0.5 * (nodes[i] + nodes[i + 1]);
                const double w = nodes[i + 1] - nodes[i];
                const double u = tr.eval(t);
                norm2_x += pc->scale * w * u * u;
                if (t - 2 * h < tr.t_begin() || t + 2 * h > tr.t_end()) continue;
                const double d4 = (-tr.eval(t + 2 * h, 3) + 8 * tr.eval(t + h, 3) - 8 * tr.eval(t - h, 3) +
                                   tr.eval(t - 2 * h, 3)) /
                                  (12 * h);
                const double r = d4 + coeff(*pc, t) * u;
                res2[k] += w * r * r;
            }
        }
    }
    // each region in its own coordinate, against ||y|| measured in that coordinate
    double worst = 0.0;
    if (norm2_x > 0.0)
        for (std::size_t k = 0; k < regions.size(); ++k)
            worst = std::max(worst, std::sqrt(res2[k] * regions[k].front()->scale / norm2_x));
    return worst;
}

Eigenpair perturbed_eigenpair(const Problem& p, double eps, double lambda, const SpectrumOptions& opt) {
    auto spec = perturbed_bvp(p, eps, lambda);
    auto sol = solve_bvp_null(spec, opt.ode, opt.multiplicity_tol);
    Eigenpair e;
    e.lambda = lambda;
    e.multiple = sol.multiple;
    const double n = l2_norm(sol.y);
    if (!(n > 0.0)) throw InconsistencyError("eigenfunction normalization failed");
    e.y = orient(sol.y.scaled(1.0 / n));
    e.l2norm = l2_norm(e.y);
    e.trace_left = e.y.state(-eps, Side::Left);
    e.trace_right = e.y.state(eps, Side::Right);
    if (opt.compute_residual) {
        e.residual = plug_back_residual(e.y, [&](const Piece& pc, double t) {
            return is_inner(pc, eps) ? inner_coefficient(p, eps, lambda, t) : p.background(t) - lambda;
        });
    }
    return e;
}

SpectrumResult perturbed_spectrum(const Problem& p, double eps, double lo, double hi, int max_count,
                                  const SpectrumOptions& opt) {
    p.validate();
    check_eps(p, eps);
    const double length = p.b - p.a;
    auto grid = adaptive_grid(lo, hi, [&](double l) { return lambda_scan_step(length, l); });
    auto scan = scan_roots([&](double l) { return perturbed_determinant(p, eps, l, opt.ode); }, grid);
    SpectrumResult out;
    out.warnings = scan.warnings;
    for (const auto& r : scan.roots) {
        if (static_cast<int>(out.pairs.size()) >= max_count) break;
        auto e = perturbed_eigenpair(p, eps, r.x, opt);
        if (e.multiple) out.warnings.push_back("eigenvalue " + std::to_string(r.x) + " is numerically multiple");
        out.pairs.push_back(std::move(e));
    }
    return out;
}

DivergenceProbe divergent_branch_probe(const Problem& p, const std::vector<double>& eps_values, int grid_points,
                                       const SpectrumOptions& opt) {
    DivergenceProbe out;
    for (double eps : eps_values) {
        check_eps(p, eps);
        // eps^4 lambda >= -max|inner potential| by the Rayleigh quotient
        double vmax = 0.0;
        for (int i = 0; i <= 400; ++i) {
            const double xi = -1.0 + i / 200.0;
            vmax = std::max(vmax, std::abs(inner_coefficient(p, eps, 0.0, xi)));
        }
        for (double x : {p.a, p.b, -eps, eps, 0.0}) vmax = std::max(vmax, std::pow(eps, 4) * std::abs(p.background(x)));
        const double c = 1.1 * vmax + 1e-12;
        const double e4 = std::pow(eps, 4);
        std::vector<double> grid;
        for (int i = 0; i <= grid_points; ++i) grid.push_back(-c + c * i / grid_points);
        grid.back() = -1e-9 * c;
        auto scan = scan_roots([&](double mu) { return perturbed_determinant(p, eps, mu / e4, opt.ode); }, grid);
        for (const auto& w : scan.warnings) out.warnings.push_back("eps=" + std::to_string(eps) + ": " + w);
        DivergenceRow row;
        row.eps = eps;
        row.negative_count = static_cast<int>(scan.roots.size());
        row.threshold_reached = !scan.roots.empty();
        if (row.threshold_reached) {
            row.scaled_lambda1 = scan.roots.front().x;
            row.lambda1 = row.scaled_lambda1 / e4;
        } else {
            out.warnings.push_back("eps=" + std::to_string(eps) + ": no negative eigenvalue, threshold not reached");
        }
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace sbspec
