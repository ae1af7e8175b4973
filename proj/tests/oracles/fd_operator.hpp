#pragma once

// Dense finite-difference oracle for u'''' + q u = lambda u on (a,b) with clamped ends.
// Five-point stencil, clamped ends by the ghost value u_{-1} = u_1; eigenvalues converge as h^2
// and are improved by one Richardson step.

#include <algorithm>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline std::vector<double> fd_clamped_eigenvalues(const std::function<double(double)>& q, double a, double b, int n,
                                                  int count) {
    const double h = (b - a) / n;
    const int m = n - 1;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);
    const double s = 1.0 / (h * h * h * h);
    const double st[5] = {1, -4, 6, -4, 1};
    for (int i = 0; i < m; ++i) {
        for (int d = -2; d <= 2; ++d) {
            const int j = i + d;
            if (j >= 0 && j < m) k(i, j) += st[d + 2] * s;
        }
        k(i, i) += q(a + (i + 1) * h);
    }
    k(0, 0) += s;
    k(m - 1, m - 1) += s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + count);
    return out;
}

inline std::vector<double> fd_clamped_extrapolated(const std::function<double(double)>& q, double a, double b, int n,
                                                   int count) {
    auto r1 = fd_clamped_eigenvalues(q, a, b, n, count);
    auto r2 = fd_clamped_eigenvalues(q, a, b, 2 * n, count);
    std::vector<double> out;
    for (int i = 0; i < count; ++i) out.push_back((4.0 * r2[i] - r1[i]) / 3.0);
    return out;
}

}  // namespace oracle
