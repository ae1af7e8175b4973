#include "sbspec/problem.hpp"

#include <algorithm>
#include <cmath>

#include "sbspec/errors.hpp"

namespace sbspec {

namespace {

// indices of the state components fixed to zero by each condition
std::pair<int, int> fixed_components(BoundaryKind kind) {
    switch (kind) {
        case BoundaryKind::Clamped: return {0, 1};
        case BoundaryKind::Pinned: return {0, 2};
        case BoundaryKind::Free: return {2, 3};
    }
    return {0, 1};
}

}  // namespace

BoundaryKind parse_boundary_kind(const std::string& name) {
    if (name == "clamped") return BoundaryKind::Clamped;
    if (name == "pinned") return BoundaryKind::Pinned;
    if (name == "free") return BoundaryKind::Free;
    throw ConfigError("unknown boundary condition '" + name + "'");
}

std::string to_string(BoundaryKind kind) {
    switch (kind) {
        case BoundaryKind::Clamped: return "clamped";
        case BoundaryKind::Pinned: return "pinned";
        case BoundaryKind::Free: return "free";
    }
    return "clamped";
}

double Problem::background(double x) const {
    double acc = 0.0;
    for (auto it = U.rbegin(); it != U.rend(); ++it) acc = acc * x + *it;
    return acc;
}

void Problem::validate() const {
    if (!(a < 0.0 && 0.0 < b)) throw DomainError("interval must satisfy a < 0 < b");
    for (double c : U) {
        if (!std::isfinite(c)) throw DomainError("background potential has a non-finite coefficient");
    }
    for (double c : {alpha, beta, gamma1, gamma2}) {
        if (!std::isfinite(c)) throw DomainError("coupling constant is not finite");
    }
}

void check_eps(const Problem& p, double eps) {
    if (!(eps > 0.0 && eps < std::min(-p.a, p.b))) {
        throw DomainError("eps must satisfy 0 < eps < min(|a|, b), got " + std::to_string(eps));
    }
}

double scaled_potential(const Problem& p, double eps, double x) {
    check_eps(p, eps);
    if (std::abs(x) >= eps) return 0.0;
    const double xi = x / eps;
    const double e2 = eps * eps;
    return p.alpha * p.Psi(xi) / (e2 * e2) + p.beta * p.Phi(xi) / (e2 * eps) + p.gamma1 * p.Upsilon1(xi) / e2 +
           p.gamma2 * p.Upsilon2(xi) / eps;
}

double inner_coefficient(const Problem& p, double eps, double lambda, double xi) {
    const double e2 = eps * eps;
    double c = 0.0;
    if (p.alpha != 0.0) c += p.alpha * p.Psi(xi);
    if (p.beta != 0.0) c += eps * p.beta * p.Phi(xi);
    if (p.gamma1 != 0.0) c += e2 * p.gamma1 * p.Upsilon1(xi);
    if (p.gamma2 != 0.0) c += e2 * eps * p.gamma2 * p.Upsilon2(xi);
    return c + e2 * e2 * (p.background(eps * xi) - lambda);
}

Eigen::Matrix<double, 4, 2> boundary_basis(BoundaryKind kind) {
    const auto [i, j] = fixed_components(kind);
    Eigen::Matrix<double, 4, 2> m = Eigen::Matrix<double, 4, 2>::Zero();
    int col = 0;
    for (int k = 0; k < 4; ++k) {
        if (k != i && k != j) m(k, col++) = 1.0;
    }
    return m;
}

Eigen::Matrix<double, 2, 4> boundary_functionals(BoundaryKind kind) {
    const auto [i, j] = fixed_components(kind);
    Eigen::Matrix<double, 2, 4> m = Eigen::Matrix<double, 2, 4>::Zero();
    m(0, i) = 1.0;
    m(1, j) = 1.0;
    return m;
}

}  // namespace sbspec
