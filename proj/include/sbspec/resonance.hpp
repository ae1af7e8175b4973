#pragma once

// Resonant set of a profile: alpha for which w'''' + alpha Psi w = 0 on (-1,1)
// has a nontrivial solution with w'' = w''' = 0 at both ends.

#include <string>
#include <vector>

#include "sbspec/ode.hpp"
#include "sbspec/piecewise.hpp"
#include "sbspec/shapes.hpp"

namespace sbspec {

struct ResonanceData {
    double alpha = 0.0;
    PiecewiseFunction w;  // on [-1,1]; w'(-1) = 1 when nondegenerate, unit L2 norm otherwise
    double theta = 0.0;   // w'(1) / w'(-1); NaN when undefined
    int multiplicity = 1;
    bool nondegenerate = false;
    State left_trace, right_trace;  // (w, w', w'', w''') at -1 and +1
    double determinant = 0.0;       // normalized determinant at the refined root
};

struct ResonanceOptions {
    double root_tol = 1e-9;           // |normalized determinant| accepted at a refined root
    double multiplicity_tol = 1e-7;   // largest singular value of the free-end matrix below this: double
    double nondegeneracy_tol = 1e-6;  // |w'(-1) w'(1)| for the unit-L2 eigenfunction
    OdeOptions ode{};
};

/// D(alpha) = det [[g1''(1), g2''(1)], [g1'''(1), g2'''(1)]] with g1, g2 the solutions
/// started from (1,0,0,0) and (0,1,0,0) at -1.
double resonance_determinant(const ShapeFunction& psi, double alpha, const OdeOptions& opt = {});

/// Orientation-normalized determinant det[Q_L Q_R] of the free-end solution frames of the two
/// ends propagated to 0. Same zeros as D, bounded, continuous in alpha.
double resonance_determinant_normalized(const ShapeFunction& psi, double alpha, const OdeOptions& opt = {});

/// Populates eigenfunction, theta, multiplicity and nondegeneracy at a (refined) resonance.
ResonanceData resonance_at(const ShapeFunction& psi, double alpha, const ResonanceOptions& opt = {});

struct ResonanceScan {
    std::vector<ResonanceData> resonances;  // sorted by alpha; alpha = 0 included when in the window
    std::vector<std::string> warnings;
};

/// All resonances in [lo, hi]; at most max_count nonzero ones, closest to 0 first.
ResonanceScan resonant_set(const ShapeFunction& psi, double lo, double hi, int max_count = 1000,
                           const ResonanceOptions& opt = {});

/// Scan step from the WKB phase of w'''' = |alpha Psi| w.
double resonance_scan_step(const ShapeFunction& psi, double alpha);

/// theta_Psi(alpha); throws NotApplicableError for degenerate resonances.
double theta(const ResonanceData& r);

/// int Phi f^2 over [-1,1].
double functional_quadratic_phi(const ShapeFunction& phi, const PiecewiseFunction& f);
/// int Ups f over [-1,1].
double functional_linear_upsilon(const ShapeFunction& upsilon, const PiecewiseFunction& f);

}  // namespace sbspec
