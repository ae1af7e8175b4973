#pragma once

// Spectrum of S_eps by shooting through (a,-eps), (-eps,eps) and (eps,b); the middle
// region is always integrated in xi = x/eps.

#include <string>
#include <vector>

#include "sbspec/ode.hpp"
#include "sbspec/piecewise.hpp"
#include "sbspec/problem.hpp"
#include "sbspec/shooting.hpp"

namespace sbspec {

struct Eigenpair {
    double lambda = 0.0;
    PiecewiseFunction y;  // unit L2 norm on (a,b)
    double l2norm = 1.0;
    State trace_left, trace_right;  // x-derivatives at -eps / +eps (or -0 / +0 for limit problems)
    double residual = 0.0;          // relative plug-back residual, worst region
    bool multiple = false;
};

struct SpectrumResult {
    std::vector<Eigenpair> pairs;
    std::vector<std::string> warnings;
};

struct SpectrumOptions {
    OdeOptions ode{};
    double multiplicity_tol = 1e-7;
    bool compute_residual = true;
};

/// Shooting specification for S_eps - lambda: both boundary frames propagated to x = 0,
/// matched in xi-coordinates.
BvpSpec perturbed_bvp(const Problem& p, double eps, double lambda);

/// det[Q_L Q_R] of the orthonormalized boundary frames at x = 0; zero iff lambda is an eigenvalue.
double perturbed_determinant(const Problem& p, double eps, double lambda, const OdeOptions& opt = {});

/// Scan step in lambda: 1/8 of the local clamped-beam eigenvalue gap on an interval of length L.
double lambda_scan_step(double length, double lambda);

SpectrumResult perturbed_spectrum(const Problem& p, double eps, double lo, double hi, int max_count = 1000,
                                  const SpectrumOptions& opt = {});

/// Eigenpair at a known root of the determinant.
Eigenpair perturbed_eigenpair(const Problem& p, double eps, double lambda, const SpectrumOptions& opt = {});

struct DivergenceRow {
    double eps = 0.0;
    double lambda1 = 0.0;
    double scaled_lambda1 = 0.0;  // eps^4 lambda1
    int negative_count = 0;
    bool threshold_reached = false;
};

struct DivergenceProbe {
    std::vector<DivergenceRow> rows;
    std::vector<std::string> warnings;
};

/// Lowest eigenvalue and number of eigenvalues in [-C eps^-4, 0) for each eps, scanning in eps^4 lambda.
/// C is the Rayleigh bound max|inner potential| (scaled by 1.1), below which no eigenvalue can lie.
DivergenceProbe divergent_branch_probe(const Problem& p, const std::vector<double>& eps_values, int grid_points = 400,
                                       const SpectrumOptions& opt = {});

/// Residual of u'''' + c u = 0 relative to ||u||, worst region. Each region (pieces sharing a scale)
/// is measured in its own coordinate with a finite-difference fourth derivative of the dense output;
/// coeff(piece, t) returns c in the piece's coordinate.
double plug_back_residual(const PiecewiseFunction& y, const std::function<double(const Piece&, double)>& coeff);

}  // namespace sbspec
