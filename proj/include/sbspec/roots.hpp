#pragma once

#include <functional>
#include <string>
#include <vector>

namespace sbspec {

struct ScanRoot {
    double x = 0.0;
    double value = 0.0;
    /// found by resolving a close pair that the scan grid did not separate
    bool close_pair = false;
};

struct ScanResult {
    std::vector<ScanRoot> roots;
    std::vector<std::string> warnings;
    int evaluations = 0;
};

/// Roots of a continuous f with simple zeros on the sorted grid range: sign changes are
/// refined by TOMS 748; local minima of |f| without a sign change are inspected by
/// Brent minimization and split into two roots when f changes sign inside.
ScanResult scan_roots(const std::function<double(double)>& f, const std::vector<double>& grid,
                      double xtol_rel = 1e-13);

/// Grid on [lo, hi] whose step at x is step(x), always containing both ends.
std::vector<double> adaptive_grid(double lo, double hi, const std::function<double(double)>& step);

}  // namespace sbspec
