#pragma once

// Clamped-clamped Euler-Bernoulli beam: cos k cosh k = 1, eigenvalue (k / length)^4.

#include <cmath>

#include <boost/math/tools/roots.hpp>

namespace oracle {

/// n-th positive root (n = 1, 2, ...) of cos k cosh k - 1, bracketed near (n + 1/2) pi.
inline double clamped_beam_k(int n) {
    auto f = [](double k) { return std::cos(k) * std::cosh(k) - 1.0; };
    const double c = (n + 0.5) * M_PI;
    boost::math::tools::eps_tolerance<double> tol(52);
    auto [lo, hi] = boost::math::tools::bisect(f, c - 0.5, c + 0.5, tol);
    return 0.5 * (lo + hi);
}

inline double clamped_beam_lambda(int n, double length) { return std::pow(clamped_beam_k(n) / length, 4); }

}  // namespace oracle
