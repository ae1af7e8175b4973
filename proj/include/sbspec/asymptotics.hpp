#pragma once
// Corrector hierarchy: outer v, v1, v2 on (a,0) U (0,b), inner w .. w3 on [-1,1],
// eigenvalue corrections lambda1, lambda2, and the assembled quasimode.

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sbspec/limit.hpp"
#include "sbspec/perturbed.hpp"
#include "sbspec/resonance.hpp"

namespace sbspec {

enum class CorrectorCase { Nonresonant, Resonant };

std::string to_string(CorrectorCase c);

/// Second and third derivatives prescribed at xi = -1 and xi = +1 for an inner problem.
struct InnerBoundaryData {
    double a2 = 0.0, a3 = 0.0;  // w''(-1), w'''(-1)
    double b2 = 0.0, b3 = 0.0;  // w''(1), w'''(1)
};

/// Intermediate solvability data of the resonant construction.
struct SolvabilityData {
    double G = 0.0, H = 0.0;
    double F_minus = 0.0, F_plus = 0.0;
};

struct CorrectorSet {
    CorrectorCase kind = CorrectorCase::Nonresonant;
    Problem problem;
    double lambda0 = 0.0, lambda1 = 0.0, lambda2 = 0.0;
    PiecewiseFunction v, v1, v2;      // x on (a,b), jump at 0
    PiecewiseFunction w, w1, w2, w3;  // xi on [-1,1]
    double c1 = 0.0, c2 = 0.0;
    SolvabilityData order1, order2;  // resonant only

    // cross-checks
    double lambda1_printed = 0.0;      // closed form (nonresonant) or corrected closed form (resonant)
    double lambda2_printed = 0.0;
    double lambda1_printed_literal = 0.0;  // resonant: closed form with the Psi-weighted functionals
    double lambda1_shooting = 0.0;     // lambda1 from solvability of the shooting system
    double lambda2_shooting = 0.0;
    double max_obstruction = 0.0;      // largest Fredholm obstruction met on the way
    double matching_check = 0.0;       // |w_k'(1) - v_k'(+0) - ...| after c_k is fixed
    double max_residual = 0.0;         // worst plug-back residual over all corrector problems
    double orthogonality = 0.0;        // max(|<v,v1>|, |<v,v2>|)
    std::vector<std::string> warnings;
};

/// Fredholm obstruction of w'''' + alpha Psi w = forcing with the boundary data: int forcing w_alpha
/// minus the boundary terms of the Lagrange identity. Zero iff the problem is solvable.
double solvability_project(const ScalarFn& forcing, const PiecewiseFunction& w_alpha, const InnerBoundaryData& data);

struct CorrectorOptions {
    OdeOptions ode{};
    double obstruction_tol = 1e-6;
    double resonance_tol = 1e-6;  // |normalized D(alpha)| below this triggers a conditioning warning
};

/// Solves w'''' + alpha Psi w = forcing on (-1,1) with the boundary data. With `resonant` the solution
/// is fixed by w'(-1) = 0; throws InconsistencyError when the problem has no solution.
PiecewiseFunction solve_inner_problem(const ShapeFunction& psi, double alpha, const ScalarFn& forcing,
                                      const InnerBoundaryData& data, bool resonant, const CorrectorOptions& opt = {});

/// pair must be a simple eigenpair of the decoupled limit (v supported on one half).
CorrectorSet correctors_nonresonant(const Problem& p, const Eigenpair& pair, const CorrectorOptions& opt = {});
CorrectorSet correctors_resonant(const Problem& p, const ResonanceData& r, const InterfaceConditions& ic,
                                 const Eigenpair& pair, const CorrectorOptions& opt = {});

class Quasimode {
public:
    Quasimode(std::shared_ptr<const CorrectorSet> cs, double eps);

    double eps() const noexcept { return eps_; }
    double Lambda() const noexcept { return Lambda_; }
    /// x-derivative of Y_eps; at x = +-eps `side` selects outer or inner part.
    double eval(double x, int order = 0, Side side = Side::Right) const;
    /// outer minus inner at -eps and +eps for derivative orders 0..3.
    const std::array<double, 4>& jump_left() const noexcept { return jump_left_; }
    const std::array<double, 4>& jump_right() const noexcept { return jump_right_; }
    double residual_outer() const noexcept { return residual_outer_; }
    double residual_inner() const noexcept { return residual_inner_; }

private:
    double outer(double x, int order, Side side) const;
    double inner(double xi, int order) const;
    std::shared_ptr<const CorrectorSet> cs_;
    double eps_;
    double Lambda_;
    std::array<double, 4> jump_left_{}, jump_right_{};
    double residual_outer_ = 0.0, residual_inner_ = 0.0;
};

/// eps = 0 gives (lambda, v).
Quasimode assemble_quasimode(std::shared_ptr<const CorrectorSet> cs, double eps);

struct AccuracyRow {
    double eps = 0.0;
    double lambda_eps = 0.0;
    double Lambda_eps = 0.0;
    double error_quasi = 0.0;  // |lambda^eps - Lambda_eps|
    double error_limit = 0.0;  // |lambda^eps - lambda|
    double error_first = 0.0;  // |lambda^eps - lambda - eps lambda1|
    double eigfun_distance = 0.0;
    std::array<double, 4> jump_left{}, jump_right{};
    double residual_outer = 0.0, residual_inner = 0.0;
    bool ambiguous = false;
};

struct AccuracyReport {
    std::vector<AccuracyRow> rows;
    double slope_limit = 0.0, slope_quasi = 0.0, slope_first = 0.0, slope_eigfun = 0.0;
    std::array<double, 4> jump_slopes_left{}, jump_slopes_right{};
    std::vector<std::string> warnings;
};

AccuracyReport quasimode_accuracy(std::shared_ptr<const CorrectorSet> cs, const std::vector<double>& eps_values,
                                  const SpectrumOptions& opt = {});

}  // namespace sbspec
