#include "sbspec/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include <Eigen/SVD>

#include "sbspec/errors.hpp"
#include "sbspec/fit.hpp"

namespace sbspec {

std::string to_string(CorrectorCase c) { return c == CorrectorCase::Resonant ? "resonant" : "nonresonant"; }

namespace {

using Vector8 = Eigen::Matrix<double, 8, 1>;
using Matrix48 = Eigen::Matrix<double, 4, 8>;
using SidedFn = std::function<double(double, Side)>;

std::vector<double> uniform_breaks(double lo, double hi, int n) {
    std::vector<double> b;
    for (int i = 0; i <= n; ++i) b.push_back(lo + (hi - lo) * i / n);
    return b;
}

struct Obstruction {
    double value = 0.0;
    double scale = 0.0;  // sum of magnitudes of the terms
};

Obstruction obstruction(const ScalarFn& forcing, const PiecewiseFunction& wa, const InnerBoundaryData& d) {
    const auto breaks = merge_breakpoints(wa.breakpoints(), uniform_breaks(-1.0, 1.0, 64));
    double integral = 0.0, mag = 0.0;
    if (forcing) {
        integral = integrate_between(breaks, [&](double xi) { return forcing(xi) * wa.eval(xi); });
        mag = integrate_between(breaks, [&](double xi) { return std::abs(forcing(xi) * wa.eval(xi)); });
    }
    const State l = wa.state(-1.0), r = wa.state(1.0);
    const double t1 = d.b3 * r(0), t2 = d.b2 * r(1), t3 = d.a3 * l(0), t4 = d.a2 * l(1);
    return {integral - (t1 - t2 - t3 + t4), mag + std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4)};
}

// w'''' + alpha Psi w = forcing on (-1,1), w'' and w''' prescribed at both ends. Shot from both ends
// to 0. With `gauge` the problem is resonant and w'(-1) = 0 selects one solution.
struct InnerSolve {
    PiecewiseFunction w;
    double mismatch = 0.0;
};

InnerSolve solve_inner(const ScalarFn& coeff, const ScalarFn& forcing, const InnerBoundaryData& d, bool gauge,
                       const OdeOptions& opt, double ref = 0.0) {
    const Eigen::Matrix<double, 1, 3> mask(1.0, 0.0, 0.0);
    Eigen::Matrix<double, 4, 3> yl = Eigen::Matrix<double, 4, 3>::Zero(), yr = yl;
    yl(2, 0) = d.a2;
    yl(3, 0) = d.a3;
    yr(2, 0) = d.b2;
    yr(3, 0) = d.b3;
    yl(0, 1) = yr(0, 1) = 1.0;
    yl(1, 2) = yr(1, 2) = 1.0;
    const ScalarFn f = forcing ? forcing : ScalarFn([](double) { return 0.0; });
    auto famL = integrate_family<3>(coeff, f, mask, -1.0, 0.0, yl, opt);
    auto famR = integrate_family<3>(coeff, f, mask, 1.0, 0.0, yr, opt);
    const auto& L = famL.y.back();
    const auto& R = famR.y.back();
    Matrix4 m;
    m << L.col(1), L.col(2), -R.col(1), -R.col(2);
    const State rhs = R.col(0) - L.col(0);
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    if (gauge) {
        Eigen::Matrix<double, 4, 3> mg;
        mg << m.col(0), m.col(2), m.col(3);
        const Eigen::Vector3d s = mg.jacobiSvd(Eigen::ComputeFullU | Eigen::ComputeFullV).solve(rhs);
        x << s(0), 0.0, s(1), s(2);
    } else {
        x = m.colPivHouseholderQr().solve(rhs);
    }
    // ref: magnitude of the outer traces, so data that cancel to rounding level are not judged on their own
    const double denom = std::max({rhs.norm(), m.norm() * x.norm(), 1e-8 * ref, 1e-300});
    InnerSolve out;
    out.mismatch = (m * x - rhs).norm() / denom;
    std::vector<Piece> pieces{Piece{famL.combine(Eigen::Vector3d(1.0, x(0), x(1))), 1.0},
                              Piece{famR.combine(Eigen::Vector3d(1.0, x(2), x(3))), 1.0}};
    out.w = PiecewiseFunction(std::move(pieces));
    return out;
}

// Relative residual of u'''' + c u - f over each side of 0, finite-difference fourth derivative.
double forced_residual(const PiecewiseFunction& y, const std::function<double(double)>& c, const SidedFn& f) {
    double worst = 0.0;
    for (const auto& pc : y.pieces()) {
        const auto& tr = pc.traj;
        const Side side = tr.t_end() <= 0.0 ? Side::Left : Side::Right;
        const double h = std::min(1e-3, (tr.t_end() - tr.t_begin()) / 8.0);
        const auto& nodes = tr.nodes();
        double res2 = 0.0, norm2 = 0.0;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            const double t = 0.5 * (nodes[i] + nodes[i + 1]);
            const double w = nodes[i + 1] - nodes[i];
            if (t - 2 * h < tr.t_begin() || t + 2 * h > tr.t_end()) continue;
            const double d4 =
                (-tr.eval(t + 2 * h, 3) + 8 * tr.eval(t + h, 3) - 8 * tr.eval(t - h, 3) + tr.eval(t - 2 * h, 3)) /
                (12 * h);
            const double u = tr.eval(t);
            const double fv = f ? f(t, side) : 0.0;
            const double r = d4 + c(t) * u - fv;
            res2 += w * r * r;
            const double m = std::abs(c(t) * u) + std::abs(fv) + std::abs(u);
            norm2 += w * m * m;
        }
        if (norm2 > 0.0) worst = std::max(worst, std::sqrt(res2 / norm2));
    }
    return worst;
}

// L v_k - lambda v_k = known + lambda_k v on (a,0) U (0,b), boundary conditions at a and b,
// interface rows c * [v_k(-0); v_k(+0)] = d. The solution is made orthogonal to v.
struct OuterSolve {
    PiecewiseFunction v;
    Vector8 traces;
    double lambda_shooting = 0.0;  // lambda_k making the shooting system solvable
    double mismatch = 0.0;
    double residual = 0.0;
};

OuterSolve solve_outer(const Problem& p, double lambda, const SidedFn& known, const PiecewiseFunction& v,
                       double lambda_k, const Matrix48& c, const Eigen::Vector4d& d, const OdeOptions& opt) {
    const ScalarFn coeff = [&](double x) { return p.background(x) - lambda; };
    auto forcing = [&](Side s) {
        return ScalarFn([&, s](double x) { return (known ? known(x, s) : 0.0) + lambda_k * v.eval(x, 0, s); });
    };
    auto vforcing = [&](Side s) { return ScalarFn([&, s](double x) { return v.eval(x, 0, s); }); };
    const Eigen::Matrix<double, 1, 3> mask(1.0, 0.0, 0.0);
    Eigen::Matrix<double, 4, 3> yl = Eigen::Matrix<double, 4, 3>::Zero(), yr = yl;
    yl.rightCols<2>() = boundary_basis(p.left);
    yr.rightCols<2>() = boundary_basis(p.right);
    auto famL = integrate_family<3>(coeff, forcing(Side::Left), mask, p.a, 0.0, yl, opt);
    auto famR = integrate_family<3>(coeff, forcing(Side::Right), mask, p.b, 0.0, yr, opt);
    const Eigen::Matrix<double, 1, 1> one(1.0);
    const Eigen::Matrix<double, 4, 1> zero = Eigen::Matrix<double, 4, 1>::Zero();
    auto pvL = integrate_family<1>(coeff, vforcing(Side::Left), one, p.a, 0.0, zero, opt, false).y.back();
    auto pvR = integrate_family<1>(coeff, vforcing(Side::Right), one, p.b, 0.0, zero, opt, false).y.back();

    Eigen::Matrix<double, 8, 4> y = Eigen::Matrix<double, 8, 4>::Zero();
    y.block<4, 2>(0, 0) = famL.y.back().rightCols<2>();
    y.block<4, 2>(4, 2) = famR.y.back().rightCols<2>();
    Vector8 ptot, pv;
    ptot << famL.y.back().col(0), famR.y.back().col(0);
    pv << pvL, pvR;
    const Matrix4 m = c * y;
    const Eigen::Vector4d r = d - c * ptot;
    Eigen::JacobiSVD<Matrix4> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Eigen::Vector4d u = svd.matrixU().col(3);

    OuterSolve out;
    const double known_part = u.dot(d - c * (ptot - lambda_k * pv));
    out.lambda_shooting = known_part / u.dot(c * pv);
    out.mismatch = std::abs(u.dot(r)) / std::max(r.norm(), 1e-300);

    Eigen::Vector4d coef = Eigen::Vector4d::Zero();
    const Eigen::Vector4d ur = svd.matrixU().transpose() * r;
    for (int i = 0; i < 3; ++i) coef += svd.matrixV().col(i) * (ur(i) / sv(i));

    // remove the component along the homogeneous solution, which is v up to scale
    const Eigen::Vector4d z = svd.matrixV().col(3);
    auto build = [&](const Eigen::Vector4d& k, double particular) {
        std::vector<Piece> pieces{Piece{famL.combine(Eigen::Vector3d(particular, k(0), k(1))), 1.0},
                                  Piece{famR.combine(Eigen::Vector3d(particular, k(2), k(3))), 1.0}};
        return PiecewiseFunction(std::move(pieces));
    };
    const PiecewiseFunction hom = build(z, 0.0);
    const PiecewiseFunction cand = build(coef, 1.0);
    coef -= z * (inner_product(cand, hom) / inner_product(hom, hom));
    out.v = build(coef, 1.0);
    out.traces << out.v.state(0.0, Side::Left), out.v.state(0.0, Side::Right);
    out.residual = forced_residual(out.v, coeff, [&](double x, Side s) {
        return (known ? known(x, s) : 0.0) + lambda_k * v.eval(x, 0, s);
    });
    return out;
}

// Row vector j with j . tau = J[tau, v](-0) - J[tau, v](+0), J the Lagrange concomitant.
Vector8 concomitant_row(const State& vm, const State& vp) {
    Vector8 j;
    j << -vm(3), vm(2), -vm(1), vm(0), vp(3), -vp(2), vp(1), -vp(0);
    return j;
}

struct Projection {
    double lambda = 0.0;
    double leak = 0.0;  // component of j outside the row space of the interface matrix
};

// lambda_k = J[v_k, v](-0) - J[v_k, v](+0) - <known, v>; the boundary term only depends on the
// prescribed combinations c tau = d because the interface conditions are self-adjoint.
Projection project_lambda(const Matrix48& c, const Eigen::Vector4d& d, const State& vm, const State& vp,
                          double known_dot_v) {
    Eigen::JacobiSVD<Matrix48> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector8 tau = svd.solve(d);
    const Vector8 j = concomitant_row(vm, vp);
    Projection out;
    out.lambda = j.dot(tau) - known_dot_v;
    const Eigen::Matrix<double, 8, 4> null = svd.matrixV().rightCols<4>();
    out.leak = (null.transpose() * j).norm() / std::max(j.norm(), 1e-300);
    return out;
}

struct Context {
    const Problem& p;
    const Eigenpair& pair;
    const CorrectorOptions& opt;
    ScalarFn inner_coeff;
    State vm, vp;
    double v4m = 0.0, v4p = 0.0;
    CorrectorSet& cs;

    Context(const Problem& p_, const Eigenpair& pair_, const CorrectorOptions& opt_, CorrectorSet& cs_)
        : p(p_), pair(pair_), opt(opt_), cs(cs_) {
        inner_coeff = [this](double xi) { return p.alpha * p.Psi(xi); };
        vm = pair.y.state(0.0, Side::Left);
        vp = pair.y.state(0.0, Side::Right);
        const double u0 = p.background(0.0);
        v4m = (pair.lambda - u0) * vm(0);
        v4p = (pair.lambda - u0) * vp(0);
    }

    InnerSolve inner(const ScalarFn& forcing, const InnerBoundaryData& d, bool gauge, const char* label) {
        auto s = solve_inner(inner_coeff, forcing, d, gauge, opt.ode,
                             vm.cwiseAbs().maxCoeff() + vp.cwiseAbs().maxCoeff());
        if (s.mismatch > opt.obstruction_tol)
            throw InconsistencyError(std::string(label) + " problem is not solvable (mismatch " +
                                     std::to_string(s.mismatch) + ")");
        note_residual(forced_residual(s.w, inner_coeff, [&](double xi, Side) { return forcing ? forcing(xi) : 0.0; }));
        return s;
    }

    void note_residual(double r) { cs.max_residual = std::max(cs.max_residual, r); }

    void check_leak(double leak, const char* label) {
        if (leak > 1e-6) cs.warnings.push_back(std::string(label) + ": interface conditions are not self-adjoint (" +
                                               std::to_string(leak) + ")");
    }

    OuterSolve outer(const SidedFn& known, double lambda_k, const Matrix48& c, const Eigen::Vector4d& d,
                     const char* label) {
        auto s = solve_outer(p, pair.lambda, known, pair.y, lambda_k, c, d, opt.ode);
        if (s.mismatch > opt.obstruction_tol)
            throw InconsistencyError(std::string(label) + " problem is not solvable (mismatch " +
                                     std::to_string(s.mismatch) + ")");
        note_residual(s.residual);
        return s;
    }
};

SidedFn sided(const PiecewiseFunction& f, double scale) {
    return [&f, scale](double x, Side s) { return scale * f.eval(x, 0, s); };
}

void finish(CorrectorSet& cs) {
    cs.orthogonality = std::max(std::abs(inner_product(cs.v, cs.v1)), std::abs(inner_product(cs.v, cs.v2)));
}

}  // namespace

double solvability_project(const ScalarFn& forcing, const PiecewiseFunction& w_alpha, const InnerBoundaryData& data) {
    return obstruction(forcing, w_alpha, data).value;
}

PiecewiseFunction solve_inner_problem(const ShapeFunction& psi, double alpha, const ScalarFn& forcing,
                                      const InnerBoundaryData& data, bool resonant, const CorrectorOptions& opt) {
    auto s = solve_inner([&](double xi) { return alpha * psi(xi); }, forcing, data, resonant, opt.ode);
    if (s.mismatch > opt.obstruction_tol)
        throw InconsistencyError("inner problem is not solvable (mismatch " + std::to_string(s.mismatch) + ")");
    return s.w;
}

CorrectorSet correctors_nonresonant(const Problem& p, const Eigenpair& pair, const CorrectorOptions& opt) {
    p.validate();
    if (pair.multiple) throw NotApplicableError("correctors need a simple eigenvalue");
    CorrectorSet cs;
    cs.kind = CorrectorCase::Nonresonant;
    cs.problem = p;
    cs.lambda0 = pair.lambda;
    cs.v = pair.y;
    if (!p.Psi.is_zero() && p.alpha != 0.0) {
        const double dn = resonance_determinant_normalized(p.Psi, p.alpha, opt.ode);
        if (std::abs(dn) < opt.resonance_tol)
            cs.warnings.push_back("alpha is close to a resonance; correctors are ill-conditioned");
    } else {
        throw NotApplicableError("alpha Psi = 0 is resonant; use the resonant construction");
    }
    Context ctx(p, pair, opt, cs);
    const State& vm = ctx.vm;
    const State& vp = ctx.vp;
    const Matrix48 c = interface_matrix(InterfaceConditions{});
    const bool right = std::abs(vp(2)) + std::abs(vp(3)) >= std::abs(vm(2)) + std::abs(vm(3));
    cs.w = PiecewiseFunction({Piece{Trajectory({-1.0, 1.0}, {State::Zero(), State::Zero()}, {0.0, 0.0}), 1.0}});

    // order 1
    auto w1 = ctx.inner(nullptr, {vm(2), 0.0, vp(2), 0.0}, false, "w1");
    cs.w1 = w1.w;
    const State w1l = cs.w1.state(-1.0), w1r = cs.w1.state(1.0);
    Eigen::Vector4d d1(vm(1), w1l(1) + vm(2), -vp(1), w1r(1) - vp(2));
    auto pr1 = project_lambda(c, d1, vm, vp, 0.0);
    ctx.check_leak(pr1.leak, "v1");
    cs.lambda1 = pr1.lambda;
    auto v1 = ctx.outer(nullptr, cs.lambda1, c, d1, "v1");
    cs.v1 = v1.v;
    cs.lambda1_shooting = v1.lambda_shooting;
    const Vector8& t1 = v1.traces;
    cs.lambda1_printed = right ? vp(2) * (vp(2) - w1r(1)) - vp(1) * vp(3) : vm(2) * (vm(2) + w1l(1)) + vm(1) * vm(3);

    // order 2
    const PiecewiseFunction w1f = cs.w1;
    ScalarFn f2 = [&](double xi) { return -p.beta * p.Phi(xi) * w1f.eval(xi); };
    auto w2 = ctx.inner(f2, {t1(2) - vm(3), vm(3), t1(6) + vp(3), vp(3)}, false, "w2");
    cs.w2 = w2.w;
    const State w2l = cs.w2.state(-1.0), w2r = cs.w2.state(1.0);
    Eigen::Vector4d d2(w1l(0) + t1(1) - 0.5 * vm(2), w2l(1) + t1(2) - 0.5 * vm(3), w1r(0) - t1(5) - 0.5 * vp(2),
                       w2r(1) - t1(6) - 0.5 * vp(3));
    const double known2 = cs.lambda1 * inner_product(cs.v1, cs.v);
    auto pr2 = project_lambda(c, d2, vm, vp, known2);
    ctx.check_leak(pr2.leak, "v2");
    cs.lambda2 = pr2.lambda;
    const PiecewiseFunction v1f = cs.v1;
    auto v2 = ctx.outer(sided(v1f, cs.lambda1), cs.lambda2, c, d2, "v2");
    cs.v2 = v2.v;
    cs.lambda2_shooting = v2.lambda_shooting;
    const Vector8& t2 = v2.traces;
    cs.lambda2_printed = right ? vp(3) * (w1r(0) - t1(5) - 0.5 * vp(2)) - vp(2) * (w2r(1) - t1(6) - 0.5 * vp(3))
                               : -vm(3) * (w1l(0) + t1(1) - 0.5 * vm(2)) + vm(2) * (w2l(1) + t1(2) - 0.5 * vm(3));

    // order 3 (inner only)
    const PiecewiseFunction w2f = cs.w2;
    ScalarFn f3 = [&](double xi) {
        return -p.beta * p.Phi(xi) * w2f.eval(xi) - p.gamma1 * p.Upsilon1(xi) * w1f.eval(xi);
    };
    auto w3 = ctx.inner(f3,
                        {t2(2) - t1(3) + 0.5 * ctx.v4m, t1(3) - ctx.v4m, t2(6) + t1(7) + 0.5 * ctx.v4p,
                         t1(7) + ctx.v4p},
                        false, "w3");
    cs.w3 = w3.w;
    finish(cs);
    return cs;
}

CorrectorSet correctors_resonant(const Problem& p, const ResonanceData& r, const InterfaceConditions& ic,
                                 const Eigenpair& pair, const CorrectorOptions& opt) {
    p.validate();
    if (!r.nondegenerate || ic.mode != LimitMode::Resonant)
        throw NotApplicableError("resonant correctors need a nondegenerate resonance");
    if (pair.multiple) throw NotApplicableError("correctors need a simple eigenvalue");
    CorrectorSet cs;
    cs.kind = CorrectorCase::Resonant;
    cs.problem = p;
    cs.lambda0 = pair.lambda;
    cs.v = pair.y;
    Context ctx(p, pair, opt, cs);
    const State& vm = ctx.vm;
    const State& vp = ctx.vp;
    const double th = ic.theta;
    const PiecewiseFunction wa = r.w.scaled(1.0 / r.w.eval(-1.0, 1));
    const State wal = wa.state(-1.0), war = wa.state(1.0);
    const double cw = vm(1);
    cs.w = wa.scaled(cw);
    const Matrix48 c = interface_matrix(ic);

    auto check_obstruction = [&](const ScalarFn& f, const InnerBoundaryData& d, const char* label) {
        const auto o = obstruction(f, wa, d);
        // floor for data that vanish identically (v'' or v''' zero at the interface)
        const double floor = 1e-6 * (vm.cwiseAbs().maxCoeff() + vp.cwiseAbs().maxCoeff()) *
                             std::max(wal.cwiseAbs().maxCoeff(), war.cwiseAbs().maxCoeff());
        const double rel = std::abs(o.value) / std::max({o.scale, floor, 1e-300});
        cs.max_obstruction = std::max(cs.max_obstruction, rel);
        if (rel > opt.obstruction_tol)
            throw InconsistencyError(std::string(label) + " obstruction " + std::to_string(rel) + " exceeds tolerance");
    };
    // affine obstruction O(tau) = g . tau + o0 of the next inner problem, as a function of the traces
    auto obstruction_row = [&](const std::function<Obstruction(const Vector8&)>& o, Vector8& g) {
        const double o0 = o(Vector8::Zero()).value;
        for (int i = 0; i < 8; ++i) g(i) = o(Vector8::Unit(i)).value - o0;
        return o0;
    };
    auto row_check = [&](const Vector8& g, const char* label) {
        const double dev = (g.transpose() - c.row(3)).norm() / c.row(3).norm();
        if (dev > 1e-6)
            cs.warnings.push_back(std::string(label) + ": projected interface row deviates from the limit operator by " +
                                  std::to_string(dev));
    };

    // order 1: w1* with w1*'(-1) = 0
    ScalarFn f1 = [&](double xi) { return -p.beta * cw * p.Phi(xi) * wa.eval(xi); };
    const InnerBoundaryData d1{vm(2), 0.0, vp(2), 0.0};
    check_obstruction(f1, d1, "w1");
    auto w1s = ctx.inner(f1, d1, true, "w1").w;
    const State w1sr = w1s.state(1.0);

    // v1 interface data
    auto o2 = [&](const Vector8& tau) {
        const double c1 = tau(1) - vm(2);
        ScalarFn f = [&, c1](double xi) {
            return -p.beta * p.Phi(xi) * (w1s.eval(xi) + c1 * wa.eval(xi)) - p.gamma1 * p.Upsilon1(xi) * cw * wa.eval(xi);
        };
        return obstruction(f, wa, {tau(2) - vm(3), vm(3), tau(6) + vp(3), vp(3)});
    };
    Vector8 g1;
    const double o20 = obstruction_row(o2, g1);
    row_check(g1, "order 1");
    cs.order1.F_minus = cw * wal(0) + vm(1);
    cs.order1.F_plus = cw * war(0) - vp(1);
    cs.order1.G = w1sr(1) - vp(2) - th * vm(2);
    cs.order1.H = -o20;
    const Eigen::Vector4d dv1(cs.order1.F_minus, cs.order1.F_plus, cs.order1.G, cs.order1.H);
    auto pr1 = project_lambda(c, dv1, vm, vp, 0.0);
    ctx.check_leak(pr1.leak, "v1");
    cs.lambda1 = pr1.lambda;
    auto v1 = ctx.outer(nullptr, cs.lambda1, c, dv1, "v1");
    cs.v1 = v1.v;
    cs.lambda1_shooting = v1.lambda_shooting;
    const Vector8 t1 = v1.traces;

    auto weighted = [&](const ShapeFunction& s, const PiecewiseFunction& f) {
        return integrate_between(merge_breakpoints(wa.breakpoints(), f.breakpoints()),
                                 [&](double xi) { return s(xi) * f.eval(xi) * wa.eval(xi); });
    };
    const double ups1_wa = integrate_between(merge_breakpoints(wa.breakpoints(), uniform_breaks(-1, 1, 64)),
                                             [&](double xi) { return p.Upsilon1(xi) * wa.eval(xi) * wa.eval(xi); });
    auto printed_lambda1 = [&](const ShapeFunction& s) {
        const double swa = integrate_between(merge_breakpoints(wa.breakpoints(), uniform_breaks(-1, 1, 64)),
                                             [&](double xi) { return s(xi) * wa.eval(xi) * wa.eval(xi); });
        const double h1 = (war(0) - th) * vp(3) - (wal(0) + 1.0) * vm(3) + p.beta * (weighted(s, w1s) - swa * vm(2)) +
                          p.gamma1 * ups1_wa * cw;
        return h1 * cw - cs.order1.G * vp(2) - cs.order1.F_minus * vm(3) + cs.order1.F_plus * vp(3);
    };
    cs.lambda1_printed = printed_lambda1(p.Phi);
    cs.lambda1_printed_literal = printed_lambda1(p.Psi);

    // order 2
    cs.c1 = t1(1) - vm(2);
    const PiecewiseFunction w1 = [&] {
        std::vector<Piece> ps;
        const double c1 = cs.c1;
        for (const auto& pc : w1s.pieces()) {
            std::vector<State> ys;
            std::vector<double> d4;
            for (std::size_t i = 0; i < pc.traj.nodes().size(); ++i) {
                const double t = pc.traj.nodes()[i];
                const Side s = pc.traj.t_end() <= 0.0 ? Side::Left : Side::Right;
                ys.push_back(pc.traj.states()[i] + c1 * wa.state(t, s));
                d4.push_back(pc.traj.fourth_derivatives()[i] - c1 * p.alpha * p.Psi(t) * wa.eval(t, 0, s));
            }
            ps.push_back(Piece{Trajectory(pc.traj.nodes(), std::move(ys), std::move(d4)), 1.0});
        }
        return PiecewiseFunction(std::move(ps));
    }();
    cs.w1 = w1;
    const State w1l = w1.state(-1.0), w1r = w1.state(1.0);
    cs.matching_check = std::abs(w1r(1) - (t1(5) + vp(2)));

    ScalarFn f2 = [&](double xi) {
        return -p.beta * p.Phi(xi) * w1.eval(xi) - p.gamma1 * p.Upsilon1(xi) * cw * wa.eval(xi);
    };
    const InnerBoundaryData d2{t1(2) - vm(3), vm(3), t1(6) + vp(3), vp(3)};
    check_obstruction(f2, d2, "w2");
    auto w2s = ctx.inner(f2, d2, true, "w2").w;
    const State w2sr = w2s.state(1.0);

    auto o3 = [&](const Vector8& tau) {
        const double c2 = tau(1) - t1(2) + 0.5 * vm(3);
        ScalarFn f = [&, c2](double xi) {
            return -p.beta * p.Phi(xi) * (w2s.eval(xi) + c2 * wa.eval(xi)) - p.gamma1 * p.Upsilon1(xi) * w1.eval(xi) -
                   p.gamma2 * p.Upsilon2(xi) * cw * wa.eval(xi);
        };
        return obstruction(f, wa,
                           {tau(2) - t1(3) + 0.5 * ctx.v4m, t1(3) - ctx.v4m, tau(6) + t1(7) + 0.5 * ctx.v4p,
                            t1(7) + ctx.v4p});
    };
    Vector8 g2;
    const double o30 = obstruction_row(o3, g2);
    row_check(g2, "order 2");
    cs.order2.F_minus = w1l(0) + t1(1) - 0.5 * vm(2);
    cs.order2.F_plus = w1r(0) - t1(5) - 0.5 * vp(2);
    cs.order2.G = w2sr(1) - th * (t1(2) - 0.5 * vm(3)) - t1(6) - 0.5 * vp(3);
    cs.order2.H = -o30;
    const Eigen::Vector4d dv2(cs.order2.F_minus, cs.order2.F_plus, cs.order2.G, cs.order2.H);
    const double known2 = cs.lambda1 * inner_product(cs.v1, cs.v);
    auto pr2 = project_lambda(c, dv2, vm, vp, known2);
    ctx.check_leak(pr2.leak, "v2");
    cs.lambda2 = pr2.lambda;
    const PiecewiseFunction v1f = cs.v1;
    auto v2 = ctx.outer(sided(v1f, cs.lambda1), cs.lambda2, c, dv2, "v2");
    cs.v2 = v2.v;
    cs.lambda2_shooting = v2.lambda_shooting;
    const Vector8 t2 = v2.traces;
    cs.lambda2_printed = cs.order2.H * cw - cs.order2.G * vp(2) - cs.order2.F_minus * vm(3) + cs.order2.F_plus * vp(3) +
                         known2;

    // order 3
    cs.c2 = t2(1) - t1(2) + 0.5 * vm(3);
    cs.w2 = [&] {
        std::vector<Piece> ps;
        for (const auto& pc : w2s.pieces()) {
            std::vector<State> ys;
            std::vector<double> d4;
            for (std::size_t i = 0; i < pc.traj.nodes().size(); ++i) {
                const double t = pc.traj.nodes()[i];
                const Side s = pc.traj.t_end() <= 0.0 ? Side::Left : Side::Right;
                ys.push_back(pc.traj.states()[i] + cs.c2 * wa.state(t, s));
                d4.push_back(pc.traj.fourth_derivatives()[i] - cs.c2 * p.alpha * p.Psi(t) * wa.eval(t, 0, s));
            }
            ps.push_back(Piece{Trajectory(pc.traj.nodes(), std::move(ys), std::move(d4)), 1.0});
        }
        return PiecewiseFunction(std::move(ps));
    }();
    const State w2r = cs.w2.state(1.0);
    cs.matching_check = std::max(cs.matching_check, std::abs(w2r(1) - (t2(5) + t1(6) + 0.5 * vp(3))));

    const PiecewiseFunction w2f = cs.w2;
    ScalarFn f3 = [&](double xi) {
        return -p.beta * p.Phi(xi) * w2f.eval(xi) - p.gamma1 * p.Upsilon1(xi) * w1.eval(xi) -
               p.gamma2 * p.Upsilon2(xi) * cw * wa.eval(xi);
    };
    const InnerBoundaryData d3{t2(2) - t1(3) + 0.5 * ctx.v4m, t1(3) - ctx.v4m, t2(6) + t1(7) + 0.5 * ctx.v4p,
                               t1(7) + ctx.v4p};
    check_obstruction(f3, d3, "w3");
    cs.w3 = ctx.inner(f3, d3, true, "w3").w;
    finish(cs);
    return cs;
}

// ---------------------------------------------------------------------------------------------
// quasimode

Quasimode::Quasimode(std::shared_ptr<const CorrectorSet> cs, double eps) : cs_(std::move(cs)), eps_(eps) {
    const CorrectorSet& c = *cs_;
    Lambda_ = c.lambda0 + eps * c.lambda1 + eps * eps * c.lambda2;
    if (eps == 0.0) return;
    check_eps(c.problem, eps);
    for (int j = 0; j < 4; ++j) {
        jump_left_[j] = outer(-eps, j, Side::Left) - inner(-1.0, j);
        jump_right_[j] = outer(eps, j, Side::Right) - inner(1.0, j);
    }
    const Problem& p = c.problem;
    const double e2 = eps * eps;
    // fourth derivatives come from the equations each corrector solves
    auto outer_res = [&](double x, Side s) {
        const double u = p.background(x);
        auto d4 = [&](const PiecewiseFunction& f, double forcing) {
            return (c.lambda0 - u) * f.eval(x, 0, s) + forcing;
        };
        const double v = c.v.eval(x, 0, s), v1 = c.v1.eval(x, 0, s), v2 = c.v2.eval(x, 0, s);
        const double y4 = d4(c.v, 0.0) + eps * d4(c.v1, c.lambda1 * v) + e2 * d4(c.v2, c.lambda1 * v1 + c.lambda2 * v);
        return y4 + (u - Lambda_) * (v + eps * v1 + e2 * v2);
    };
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
        const double xl = p.a + (-eps - p.a) * i / n;
        const double xr = eps + (p.b - eps) * i / n;
        residual_outer_ = std::max({residual_outer_, std::abs(outer_res(xl, Side::Left)),
                                    std::abs(outer_res(xr, Side::Right))});
        const double xi = -1.0 + 2.0 * i / n;
        const Side s = xi <= 0.0 ? Side::Left : Side::Right;
        const double w = c.w.eval(xi, 0, s), w1 = c.w1.eval(xi, 0, s), w2 = c.w2.eval(xi, 0, s),
                     w3 = c.w3.eval(xi, 0, s);
        const double phi = p.beta * p.Phi(xi), u1 = p.gamma1 * p.Upsilon1(xi), u2 = p.gamma2 * p.Upsilon2(xi);
        // forcing of each inner equation
        const double f1 = -phi * w, f2 = -phi * w1 - u1 * w, f3 = -phi * w2 - u1 * w1 - u2 * w;
        const double y = eps * w + e2 * w1 + e2 * eps * w2 + e2 * e2 * w3;
        const double bracket = e2 * f1 + e2 * eps * f2 + e2 * e2 * f3 +
                               (eps * phi + e2 * u1 + e2 * eps * u2 + e2 * e2 * (p.background(eps * xi) - Lambda_)) * y;
        residual_inner_ = std::max(residual_inner_, std::abs(bracket / (e2 * e2)));
    }
}

double Quasimode::outer(double x, int order, Side side) const {
    const CorrectorSet& c = *cs_;
    return c.v.eval(x, order, side) + eps_ * c.v1.eval(x, order, side) + eps_ * eps_ * c.v2.eval(x, order, side);
}

double Quasimode::inner(double xi, int order) const {
    const CorrectorSet& c = *cs_;
    const Side s = xi <= 0.0 ? Side::Left : Side::Right;
    const double y = eps_ * c.w.eval(xi, order, s) + eps_ * eps_ * c.w1.eval(xi, order, s) +
                     std::pow(eps_, 3) * c.w2.eval(xi, order, s) + std::pow(eps_, 4) * c.w3.eval(xi, order, s);
    return y / std::pow(eps_, order);
}

double Quasimode::eval(double x, int order, Side side) const {
    if (eps_ == 0.0) return cs_->v.eval(x, order, side);
    const bool in = side == Side::Right ? (x >= -eps_ && x < eps_) : (x > -eps_ && x <= eps_);
    return in ? inner(x / eps_, order) : outer(x, order, side);
}

Quasimode assemble_quasimode(std::shared_ptr<const CorrectorSet> cs, double eps) {
    if (!cs) throw DomainError("corrector set is missing");
    if (eps < 0.0) throw DomainError("eps must be nonnegative");
    return Quasimode(std::move(cs), eps);
}

AccuracyReport quasimode_accuracy(std::shared_ptr<const CorrectorSet> cs, const std::vector<double>& eps_values,
                                  const SpectrumOptions& opt) {
    if (eps_values.empty()) throw DomainError("eps sequence is empty");
    const CorrectorSet& c = *cs;
    auto one = [&](double eps) {
        AccuracyRow row;
        row.eps = eps;
        Quasimode q = assemble_quasimode(cs, eps);
        row.Lambda_eps = q.Lambda();
        row.jump_left = q.jump_left();
        row.jump_right = q.jump_right();
        row.residual_outer = q.residual_outer();
        row.residual_inner = q.residual_inner();
        // window wide enough to contain the shifted eigenvalue
        const double shift = std::abs(q.Lambda() - c.lambda0);
        const double gap = 4.0 * lambda_scan_step(c.problem.b - c.problem.a, c.lambda0);
        const double half = std::max(3.0 * shift, gap);
        SpectrumOptions o = opt;
        o.compute_residual = false;
        auto spec = perturbed_spectrum(c.problem, eps, q.Lambda() - half, q.Lambda() + half, 1000, o);
        if (spec.pairs.empty()) throw AccuracyError("no perturbed eigenvalue near the quasimode", half);
        std::sort(spec.pairs.begin(), spec.pairs.end(), [&](const Eigenpair& x, const Eigenpair& y) {
            return std::abs(x.lambda - q.Lambda()) < std::abs(y.lambda - q.Lambda());
        });
        const Eigenpair& e = spec.pairs.front();
        if (spec.pairs.size() > 1) {
            const double d0 = std::abs(e.lambda - q.Lambda()), d1 = std::abs(spec.pairs[1].lambda - q.Lambda());
            row.ambiguous = d1 - d0 <= 1e-3 * d1;
        }
        row.lambda_eps = e.lambda;
        row.error_quasi = std::abs(e.lambda - q.Lambda());
        row.error_limit = std::abs(e.lambda - c.lambda0);
        row.error_first = std::abs(e.lambda - c.lambda0 - eps * c.lambda1);
        const double sign = inner_product(e.y, c.v) < 0.0 ? -1.0 : 1.0;
        row.eigfun_distance = l2_distance(e.y.scaled(sign), c.v);
        return row;
    };
    std::vector<std::future<AccuracyRow>> jobs;
    for (double eps : eps_values) jobs.push_back(std::async(std::launch::async, one, eps));
    AccuracyReport rep;
    for (auto& j : jobs) rep.rows.push_back(j.get());
    for (const auto& r : rep.rows)
        if (r.ambiguous) rep.warnings.push_back("eps=" + std::to_string(r.eps) + ": eigenvalue matching is ambiguous");
    if (rep.rows.size() >= 3) {
        auto slope = [&](auto get) {
            std::vector<std::pair<double, double>> pts;
            for (const auto& r : rep.rows) pts.emplace_back(r.eps, get(r));
            auto f = fit_rate(pts);
            rep.warnings.insert(rep.warnings.end(), f.warnings.begin(), f.warnings.end());
            return f.slope;
        };
        rep.slope_limit = slope([](const AccuracyRow& r) { return r.error_limit; });
        rep.slope_quasi = slope([](const AccuracyRow& r) { return r.error_quasi; });
        rep.slope_first = slope([](const AccuracyRow& r) { return r.error_first; });
        rep.slope_eigfun = slope([](const AccuracyRow& r) { return r.eigfun_distance; });
        for (int j = 0; j < 4; ++j) {
            rep.jump_slopes_left[j] = slope([j](const AccuracyRow& r) { return std::abs(r.jump_left[j]); });
            rep.jump_slopes_right[j] = slope([j](const AccuracyRow& r) { return std::abs(r.jump_right[j]); });
        }
    }
    return rep;
}

}  // namespace sbspec
