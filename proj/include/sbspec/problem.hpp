#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbspec/shapes.hpp"

namespace sbspec {

enum class BoundaryKind { Clamped, Pinned, Free };

BoundaryKind parse_boundary_kind(const std::string& name);
std::string to_string(BoundaryKind kind);

/// d^4/dx^4 + U + Psi_eps on (a,b) with squeezed potential
/// alpha eps^-4 Psi(x/eps) + beta eps^-3 Phi(x/eps) + gamma1 eps^-2 Ups1(x/eps) + gamma2 eps^-1 Ups2(x/eps).
struct Problem {
    double a = -1.0;
    double b = 1.0;
    std::vector<double> U;  // monomial coefficients in x; empty means U = 0
    double alpha = 0.0, beta = 0.0, gamma1 = 0.0, gamma2 = 0.0;
    ShapeFunction Psi = ShapeFunction::zero();
    ShapeFunction Phi = ShapeFunction::zero();
    ShapeFunction Upsilon1 = ShapeFunction::zero();
    ShapeFunction Upsilon2 = ShapeFunction::zero();
    BoundaryKind left = BoundaryKind::Clamped;
    BoundaryKind right = BoundaryKind::Clamped;

    double background(double x) const;
    /// Throws DomainError unless a < 0 < b.
    void validate() const;
};

/// Psi_eps(x); exactly 0 for |x| >= eps. Requires 0 < eps < min(|a|, b).
double scaled_potential(const Problem& p, double eps, double x);

/// Inner coefficient in xi = x/eps of the rescaled equation:
/// alpha Psi + eps beta Phi + eps^2 gamma1 Ups1 + eps^3 gamma2 Ups2 + eps^4 (U(eps xi) - lambda).
double inner_coefficient(const Problem& p, double eps, double lambda, double xi);

void check_eps(const Problem& p, double eps);

/// Two states spanning the solutions that satisfy the condition at an end.
Eigen::Matrix<double, 4, 2> boundary_basis(BoundaryKind kind);
/// Two functionals whose vanishing is the condition at an end.
Eigen::Matrix<double, 2, 4> boundary_functionals(BoundaryKind kind);

}  // namespace sbspec
