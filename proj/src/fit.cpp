#include "sbspec/fit.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "sbspec/errors.hpp"

namespace sbspec {

RateFit fit_rate(const std::vector<std::pair<double, double>>& rows) {
    RateFit fit;
    std::vector<double> lx, ly;
    for (const auto& [eps, value] : rows) {
        if (!(eps > 0.0) || !(value > 0.0) || !std::isfinite(value)) {
            fit.warnings.push_back("row eps=" + std::to_string(eps) + " value=" + std::to_string(value) +
                                   " excluded from the log-log fit");
            continue;
        }
        lx.push_back(std::log(eps));
        ly.push_back(std::log(value));
    }
    fit.used = static_cast<int>(lx.size());
    if (fit.used < 3) throw DomainError("rate fit needs at least 3 usable rows");
    const double n = fit.used;
    double mx = 0, my = 0;
    for (int i = 0; i < fit.used; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < fit.used; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) throw DomainError("rate fit needs distinct eps values");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

namespace {

double poly_at_zero(const std::vector<std::pair<double, double>>& rows, int degree) {
    const int n = static_cast<int>(rows.size());
    Eigen::MatrixXd a(n, degree + 1);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        double p = 1.0;
        for (int k = 0; k <= degree; ++k) {
            a(i, k) = p;
            p *= rows[i].first;
        }
        b(i) = rows[i].second;
    }
    return a.colPivHouseholderQr().solve(b)(0);
}

}  // namespace

Extrapolation extrapolate_to_zero(std::vector<std::pair<double, double>> rows) {
    if (rows.size() < 3) throw DomainError("extrapolation needs at least 3 rows");
    std::sort(rows.begin(), rows.end());
    rows.resize(3);
    std::vector<std::pair<double, double>> two(rows.begin(), rows.begin() + 2);
    Extrapolation e;
    e.value = poly_at_zero(rows, 2);
    e.error = std::abs(e.value - poly_at_zero(two, 1));
    return e;
}

}  // namespace sbspec
