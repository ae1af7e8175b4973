#pragma once

// Limit operators as eps -> 0: decoupled clamped halves when alpha is not resonant,
// and the interface operator f(0) = 0, f'(+0) = theta f'(-0),
// theta f''(+0) - f''(-0) = kappa f'(-0) at a nondegenerate resonance.

#include "sbspec/perturbed.hpp"
#include "sbspec/resonance.hpp"

namespace sbspec {

enum class LimitMode { Nonresonant, Resonant };

struct InterfaceConditions {
    LimitMode mode = LimitMode::Nonresonant;
    double theta = 0.0;
    double kappa = 0.0;  // beta * int Phi (w_alpha / w_alpha'(-1))^2
};

/// Throws NotApplicableError for degenerate resonances.
InterfaceConditions build_interface(const ResonanceData& r, double beta, const ShapeFunction& phi);

/// Rows acting on [f(-0) state; f(+0) state]. Nonresonant: f(+-0) = f'(+-0) = 0.
Eigen::Matrix<double, 4, 8> interface_matrix(const InterfaceConditions& ic);

/// Union of the clamped spectra of (a,0) and (0,b); eigenfunctions vanish on the other half.
/// Coinciding eigenvalues are flagged multiple.
SpectrumResult limit_spectrum_nonresonant(const Problem& p, double lo, double hi, int max_count = 1000,
                                          const SpectrumOptions& opt = {});

BvpSpec resonant_limit_bvp(const Problem& p, const InterfaceConditions& ic, double lambda);
double resonant_limit_determinant(const Problem& p, const InterfaceConditions& ic, double lambda,
                                  const OdeOptions& opt = {});

SpectrumResult limit_spectrum_resonant(const Problem& p, const InterfaceConditions& ic, double lo, double hi,
                                       int max_count = 1000, const SpectrumOptions& opt = {});

Eigenpair limit_eigenpair_resonant(const Problem& p, const InterfaceConditions& ic, double lambda,
                                   const SpectrumOptions& opt = {});

/// One clamped half: side < 0 for (a,0), side > 0 for (0,b).
double half_determinant(const Problem& p, int side, double lambda, const OdeOptions& opt = {});
Eigenpair limit_eigenpair_half(const Problem& p, int side, double lambda, const SpectrumOptions& opt = {});

}  // namespace sbspec
