#include "sbspec/shapes.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sbspec/errors.hpp"

namespace sbspec {

namespace {

constexpr int kMaxOrder = 12;
constexpr double kQuadratureTol = 1e-10;

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// j-th derivative of the polynomial sum c_k xi^k.
double poly_derivative(const std::vector<double>& c, double xi, int j) {
    double acc = 0.0;
    for (int k = static_cast<int>(c.size()) - 1; k >= j; --k) {
        double falling = 1.0;
        for (int i = 0; i < j; ++i) falling *= (k - i);
        acc = acc * xi + c[k] * falling;
    }
    return acc;
}

}  // namespace

double bump(double xi, int n) {
    if (n < 0 || n > kMaxOrder) throw DomainError("bump derivative order out of range");
    const double s = 1.0 - xi * xi;
    // exp(-1/s) underflows well before s reaches 1/745; the profile is flat there.
    if (!(s > 1.0 / 740.0)) return 0.0;

    // g = -1/(1-xi^2) = -(1/(1-xi) + 1/(1+xi))/2
    std::array<double, kMaxOrder + 2> g{};
    const double rm = 1.0 / (1.0 - xi);
    const double rp = 1.0 / (1.0 + xi);
    double pm = rm, pp = rp, fact = 1.0;
    for (int k = 1; k <= n; ++k) {
        pm *= rm;
        pp *= rp;
        fact *= k;
        g[k] = -0.5 * fact * (pm + ((k % 2) ? -pp : pp));
    }

    std::array<double, kMaxOrder + 1> b{};
    b[0] = std::exp(-1.0 / s);
    for (int m = 0; m < n; ++m) {
        double acc = 0.0;
        for (int j = 0; j <= m; ++j) acc += binomial(m, j) * g[j + 1] * b[m - j];
        b[m + 1] = acc;
    }
    return b[n];
}

ShapeFunction ShapeFunction::zero() { return ShapeFunction{}; }

ShapeFunction make_bump_shape(std::span<const double> coefficients, int derivative) {
    if (coefficients.empty()) throw InvalidShapeError("bump-poly shape needs at least one coefficient");
    bool any_nonzero = false;
    for (double c : coefficients) {
        if (!std::isfinite(c)) throw InvalidShapeError("bump-poly coefficient is not finite");
        any_nonzero = any_nonzero || c != 0.0;
    }
    if (!any_nonzero) throw InvalidShapeError("bump-poly polynomial vanishes identically");
    if (derivative < 0 || derivative > 4) throw InvalidShapeError("bump-poly derivative order must be in [0,4]");

    ShapeFunction f;
    f.family_ = ShapeFamily::BumpPoly;
    f.coeffs_.assign(coefficients.begin(), coefficients.end());
    f.deriv_ = derivative;
    return f;
}

double ShapeFunction::derivative(double xi, int k) const {
    if (family_ == ShapeFamily::Zero) return 0.0;
    if (!(std::abs(xi) < 1.0)) return 0.0;
    const int n = deriv_ + k;
    double acc = 0.0;
    const int degree = static_cast<int>(coeffs_.size()) - 1;
    for (int j = 0; j <= std::min(n, degree); ++j) {
        acc += binomial(n, j) * poly_derivative(coeffs_, xi, j) * bump(xi, n - j);
    }
    return acc;
}

double integrate_on_unit(const std::function<double(double)>& g, unsigned max_depth) {
    double error = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        g, -1.0, 1.0, max_depth, 1e-13, &error);
    if (!(error <= kQuadratureTol)) throw AccuracyError("adaptive quadrature did not converge", error);
    return value;
}

double moment(const ShapeFunction& f, int k, unsigned max_depth) {
    if (k < 0) throw DomainError("moment order must be non-negative");
    if (f.is_zero()) return 0.0;
    const double inv_fact = 1.0 / factorial(k);
    return integrate_on_unit([&](double xi) { return std::pow(xi, k) * f(xi) * inv_fact; }, max_depth);
}

MomentVector moments(const ShapeFunction& f, int max_order, unsigned max_depth) {
    MomentVector mv;
    for (int k = 0; k <= max_order; ++k) mv.values.push_back(moment(f, k, max_depth));
    return mv;
}

DeltaLikeResult is_delta_like(const ShapeFunction& f, int n, double tol, unsigned max_depth) {
    if (n < 0) throw DomainError("delta-like order must be non-negative");
    DeltaLikeResult r;
    r.moments = moments(f, n, max_depth);
    bool ok = true;
    for (int j = 0; j < n; ++j) ok = ok && std::abs(r.moments.values[j]) <= tol;
    const double target = (n % 2) ? -1.0 : 1.0;
    r.delta_like = ok && std::abs(r.moments.values[n] - target) <= tol;
    return r;
}

}  // namespace sbspec
