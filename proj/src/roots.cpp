#include "sbspec/roots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "sbspec/errors.hpp"

namespace sbspec {

namespace {

double refine(const std::function<double(double)>& f, double lo, double hi, double flo, double fhi, double xtol_rel,
              int& evals) {
    auto g = [&](double x) {
        ++evals;
        return f(x);
    };
    auto tol = [xtol_rel](double a, double b) {
        return std::abs(b - a) <= xtol_rel * std::max(1.0, std::max(std::abs(a), std::abs(b)));
    };
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(g, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (r.first + r.second);
}

}  // namespace

std::vector<double> adaptive_grid(double lo, double hi, const std::function<double(double)>& step) {
    if (!(hi > lo)) throw DomainError("scan window must satisfy lo < hi");
    std::vector<double> g{lo};
    double x = lo;
    while (x < hi) {
        const double h = step(x);
        if (!(h > 0.0)) throw DomainError("scan step must be positive");
        x = std::min(hi, x + h);
        if (hi - x < 1e-3 * h) x = hi;
        g.push_back(x);
    }
    return g;
}

ScanResult scan_roots(const std::function<double(double)>& f, const std::vector<double>& grid, double xtol_rel) {
    ScanResult res;
    const std::size_t n = grid.size();
    if (n < 2) throw DomainError("scan grid needs at least two points");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = f(grid[i]);
        ++res.evaluations;
    }
    auto add = [&](double x, bool pair) { res.roots.push_back({x, 0.0, pair}); };

    for (std::size_t i = 0; i < n; ++i) {
        if (v[i] == 0.0) add(grid[i], false);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (v[i] == 0.0 || v[i + 1] == 0.0) continue;
        if ((v[i] < 0.0) != (v[i + 1] < 0.0)) {
            add(refine(f, grid[i], grid[i + 1], v[i], v[i + 1], xtol_rel, res.evaluations), false);
        }
    }
    // |f| dips toward zero without a sign change: possibly two roots between neighbours
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double s = v[i] > 0.0 ? 1.0 : -1.0;
        if (v[i] == 0.0 || s * v[i - 1] <= 0.0 || s * v[i + 1] <= 0.0) continue;
        if (!(s * v[i] < s * v[i - 1] && s * v[i] < s * v[i + 1])) continue;
        // dense resample first; Brent alone can settle on a bracket end when |f| is not unimodal
        constexpr int kSub = 16;
        std::vector<double> xs, vs;
        for (int k = 0; k <= kSub; ++k) {
            const double x = grid[i - 1] + (grid[i + 1] - grid[i - 1]) * k / kSub;
            xs.push_back(x);
            vs.push_back(k == 0 ? v[i - 1] : k == kSub ? v[i + 1] : f(x));
            if (k != 0 && k != kSub) ++res.evaluations;
        }
        bool found = false;
        for (int k = 0; k < kSub; ++k) {
            if (vs[k] == 0.0) {
                add(xs[k], true);
                found = true;
            } else if ((vs[k] < 0.0) != (vs[k + 1] < 0.0) && vs[k + 1] != 0.0) {
                add(refine(f, xs[k], xs[k + 1], vs[k], vs[k + 1], xtol_rel, res.evaluations), true);
                found = true;
            }
        }
        if (!found) {
            auto g = [&](double x) {
                ++res.evaluations;
                return s * f(x);
            };
            std::uintmax_t iters = 100;
            auto m = boost::math::tools::brent_find_minima(g, grid[i - 1], grid[i + 1], 40, iters);
            if (m.second < 0.0) {
                const double xm = m.first;
                const double fm = s * m.second;
                add(refine(f, grid[i - 1], xm, v[i - 1], fm, xtol_rel, res.evaluations), true);
                add(refine(f, xm, grid[i + 1], fm, v[i + 1], xtol_rel, res.evaluations), true);
                found = true;
            }
        }
        if (found)
            res.warnings.push_back("scan resolution: close root pair between " + std::to_string(grid[i - 1]) + " and " +
                                   std::to_string(grid[i + 1]) + " resolved by local refinement");
    }
    std::sort(res.roots.begin(), res.roots.end(), [](const ScanRoot& a, const ScanRoot& b) { return a.x < b.x; });
    for (auto& r : res.roots) {
        r.value = f(r.x);
        ++res.evaluations;
    }
    return res;
}

}  // namespace sbspec
