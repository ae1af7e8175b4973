#pragma once

// Dense finite-difference oracle for w'''' + alpha Psi w = 0 with free ends.
// Energy form: A = D2^T (h I) D2 (natural free ends), B = h diag(Psi).
// A is singular on linear functions; adding rho (B Z)(B Z)^T, Z = span{1, xi},
// leaves every alpha != 0 eigenpair intact (they satisfy Z^T B w = 0) and moves the
// two kernel directions to |alpha| ~ rho. The SPD pencil is then reduced by Cholesky.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct FdPencil {
    Eigen::MatrixXd a_hat;
    Eigen::MatrixXd b;
};

inline FdPencil fd_pencil(const std::function<double(double)>& psi, int n, double rho = 1e8) {
    const double h = 2.0 / n;
    const int m = n + 1;
    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(n - 1, m);
    for (int i = 1; i < n; ++i) {
        d2(i - 1, i - 1) = 1.0 / (h * h);
        d2(i - 1, i) = -2.0 / (h * h);
        d2(i - 1, i + 1) = 1.0 / (h * h);
    }
    FdPencil p;
    p.a_hat = h * d2.transpose() * d2;
    Eigen::VectorXd wpsi(m);
    Eigen::MatrixXd z(m, 2);
    for (int i = 0; i < m; ++i) {
        const double xi = -1.0 + i * h;
        wpsi(i) = h * psi(xi);
        z(i, 0) = 1.0;
        z(i, 1) = xi;
    }
    p.b = wpsi.asDiagonal();
    const Eigen::MatrixXd bz = p.b * z;
    p.a_hat += rho * bz * bz.transpose();
    return p;
}

/// The `count` nonzero alphas closest to 0 at resolution n, sorted ascending.
inline std::vector<double> fd_resonances(const std::function<double(double)>& psi, int n, int count) {
    auto p = fd_pencil(psi, n);
    Eigen::LLT<Eigen::MatrixXd> llt(p.a_hat);
    const Eigen::MatrixXd l = llt.matrixL();
    Eigen::MatrixXd c = l.triangularView<Eigen::Lower>().solve(p.b);
    c = l.triangularView<Eigen::Lower>().solve(c.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
    // B w = mu A w with mu = -1/alpha; largest |mu| first
    std::vector<double> mu(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(mu.begin(), mu.end(), [](double x, double y) { return std::abs(x) > std::abs(y); });
    std::vector<double> alphas;
    for (int i = 0; i < count; ++i) alphas.push_back(-1.0 / mu[i]);
    std::sort(alphas.begin(), alphas.end());
    return alphas;
}

/// Three resolutions n, 2n, 4n; two Richardson steps in h^2.
inline std::vector<double> fd_resonances_extrapolated(const std::function<double(double)>& psi, int n, int count) {
    auto r1 = fd_resonances(psi, n, count);
    auto r2 = fd_resonances(psi, 2 * n, count);
    auto r4 = fd_resonances(psi, 4 * n, count);
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        const double a = (4.0 * r2[i] - r1[i]) / 3.0;
        const double b = (4.0 * r4[i] - r2[i]) / 3.0;
        out.push_back((16.0 * b - a) / 15.0);
    }
    return out;
}

/// Eigenvalues -alpha of the unsymmetrized pencil from a general QZ solve (finite ones only).
inline std::vector<std::complex<double>> fd_general_alphas(const std::function<double(double)>& psi, int n) {
    auto p = fd_pencil(psi, n);
    Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(p.b, p.a_hat, false);
    std::vector<std::complex<double>> out;
    const auto& al = ges.alphas();
    const auto& be = ges.betas();
    for (int i = 0; i < al.size(); ++i) {
        if (std::abs(al(i)) < 1e-14 * p.b.norm()) continue;
        out.push_back(-std::complex<double>(be(i), 0.0) / al(i));  // alpha = -1/mu
    }
    return out;
}

}  // namespace oracle
