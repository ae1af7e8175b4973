#pragma once

#include <string>
#include <utility>
#include <vector>

namespace sbspec {

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;  // log(value) at log(eps) = 0
    double r2 = 0.0;
    int used = 0;
    std::vector<std::string> warnings;
};

/// Least squares of log(value) against log(eps). Nonpositive values are dropped with a
/// warning; fewer than three usable rows is an error.
RateFit fit_rate(const std::vector<std::pair<double, double>>& rows);

struct Extrapolation {
    double value = 0.0;
    double error = 0.0;  // |quadratic - linear| in eps on the smallest points
};

/// Polynomial extrapolation to eps = 0 from the (eps, value) rows with the smallest eps.
Extrapolation extrapolate_to_zero(std::vector<std::pair<double, double>> rows);

}  // namespace sbspec
