#pragma once

// Composite Gauss-Legendre rule on a uniform panel grid. Deliberately independent
// of the adaptive quadrature used by the library.

#include <array>
#include <cmath>
#include <functional>

namespace oracle {

inline double gauss_legendre_composite(const std::function<double(double)>& f, double lo, double hi, int panels) {
    static constexpr std::array<double, 4> x = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                                0.9602898564975363};
    static constexpr std::array<double, 4> w = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                                0.1012285362903763};
    const double h = (hi - lo) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = lo + (p + 0.5) * h;
        for (int i = 0; i < 4; ++i) {
            sum += w[i] * (f(mid - 0.5 * h * x[i]) + f(mid + 0.5 * h * x[i]));
        }
    }
    return 0.5 * h * sum;
}

// Two resolutions, Richardson-extrapolated assuming order 16.
inline double richardson_quadrature(const std::function<double(double)>& f, double lo, double hi, int panels) {
    const double coarse = gauss_legendre_composite(f, lo, hi, panels);
    const double fine = gauss_legendre_composite(f, lo, hi, 2 * panels);
    return fine + (fine - coarse) / 65535.0;
}

}  // namespace oracle
