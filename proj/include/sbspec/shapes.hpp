#pragma once

// Regularization profiles: smooth shapes supported on [-1,1], their moments,
// delta^(n)-like classification and the squeezed potential built from them.

#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sbspec {

enum class ShapeFamily { Zero, BumpPoly };

/// Profile f(xi) = d^m/dxi^m [ p(xi) * exp(-1/(1-xi^2)) ] on (-1,1), zero elsewhere.
///
/// p is a polynomial given by its monomial coefficients and m is a small
/// derivative order (0 for the plain family). The family is closed under
/// differentiation, so value and derivative evaluators are analytic.
class ShapeFunction {
public:
    /// Identically zero profile, used for unused couplings.
    static ShapeFunction zero();

    ShapeFamily family() const noexcept { return family_; }
    const std::vector<double>& coefficients() const noexcept { return coeffs_; }
    int derivative_order() const noexcept { return deriv_; }
    bool is_zero() const noexcept { return family_ == ShapeFamily::Zero; }

    double operator()(double xi) const { return derivative(xi, 0); }

    /// k-th derivative of the profile; exact zero for |xi| >= 1.
    double derivative(double xi, int k) const;

private:
    friend ShapeFunction make_bump_shape(std::span<const double>, int);
    ShapeFunction() = default;

    ShapeFamily family_ = ShapeFamily::Zero;
    std::vector<double> coeffs_;
    int deriv_ = 0;
};

/// Builds sum_k c_k xi^k b(xi) (optionally differentiated `derivative` times).
/// Throws InvalidShapeError for empty, non-finite or identically zero coefficients.
ShapeFunction make_bump_shape(std::span<const double> coefficients, int derivative = 0);

inline ShapeFunction make_bump_shape(std::initializer_list<double> coefficients, int derivative = 0) {
    return make_bump_shape(std::span<const double>(coefficients.begin(), coefficients.size()), derivative);
}

/// Standard bump exp(-1/(1-xi^2)) and its n-th derivative.
double bump(double xi, int n = 0);

struct MomentVector {
    std::vector<double> values;  // <f>_0 .. <f>_K
    int max_order() const { return static_cast<int>(values.size()) - 1; }
};

/// <f>_k = (k!)^{-1} int xi^k f(xi) dxi by adaptive Gauss-Kronrod, absolute error <= 1e-10.
/// `max_depth` bounds the bisection depth; AccuracyError if the estimate stays above tolerance.
double moment(const ShapeFunction& f, int k, unsigned max_depth = 15);

MomentVector moments(const ShapeFunction& f, int max_order, unsigned max_depth = 15);

struct DeltaLikeResult {
    bool delta_like = false;
    MomentVector moments;
};

/// f is delta^(n)-like iff <f>_j = 0 for j < n and <f>_n = (-1)^n, each within tol.
DeltaLikeResult is_delta_like(const ShapeFunction& f, int n, double tol = 1e-8, unsigned max_depth = 15);

/// int_{-1}^{1} g(xi) dxi for a smooth integrand, adaptive Gauss-Kronrod (absolute tolerance 1e-10).
double integrate_on_unit(const std::function<double(double)>& g, unsigned max_depth = 15);

}  // namespace sbspec
