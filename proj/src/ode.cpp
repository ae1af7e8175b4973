#include "sbspec/ode.hpp"

#include <algorithm>
#include <cmath>

#include "sbspec/errors.hpp"

namespace sbspec {

namespace {

// Two-point Hermite interpolation with N derivatives (0..N-1) known at each end of
// a panel, degree 2N-1 in s in [0,1]. The low coefficients come from the left
// Taylor data; the top N solve a constant system with entries (m+N)!/(m+N-k)!.
template <int N>
const Eigen::Matrix<double, N, N>& hermite_tail_inverse() {
    static const Eigen::Matrix<double, N, N> inv = [] {
        Eigen::Matrix<double, N, N> a;
        for (int k = 0; k < N; ++k) {
            for (int m = 0; m < N; ++m) {
                double f = 1.0;
                for (int i = 0; i < k; ++i) f *= (m + N - i);
                a(k, m) = f;
            }
        }
        return Eigen::Matrix<double, N, N>(a.inverse());
    }();
    return inv;
}

// d-th s-derivative (d = 0 or 1) of the interpolant, converted to t units.
template <int N>
double hermite_value(const double* ya, const double* yb, double h, double s, int d) {
    Eigen::Matrix<double, 2 * N, 1> c;
    double hk = 1.0, fact = 1.0;
    for (int j = 0; j < N; ++j) {
        if (j > 0) fact *= j;
        c(j) = ya[j] * hk / fact;
        hk *= h;
    }
    Eigen::Matrix<double, N, 1> rhs;
    hk = 1.0;
    for (int k = 0; k < N; ++k) {
        double head = 0.0;
        for (int j = k; j < N; ++j) {
            double f = 1.0;
            for (int i = 0; i < k; ++i) f *= (j - i);
            head += c(j) * f;
        }
        rhs(k) = yb[k] * hk - head;
        hk *= h;
    }
    c.template tail<N>() = hermite_tail_inverse<N>() * rhs;
    double acc = 0.0;
    for (int j = 2 * N - 1; j >= d; --j) acc = acc * s + c(j) * (d ? j : 1);
    return d ? acc / h : acc;
}

// The order-th derivative is obtained by differentiating once the interpolant of
// the node data of orders >= order-1. Differentiating the value interpolant
// order times would amplify node errors by h^-order.
double hermite_derivative(const double* ya, const double* yb, int available, int order, double h, double s) {
    const int base = order > 0 ? order - 1 : 0;
    const int d = order - base;
    switch (available - base) {
        case 2: return hermite_value<2>(ya + base, yb + base, h, s, d);
        case 3: return hermite_value<3>(ya + base, yb + base, h, s, d);
        case 4: return hermite_value<4>(ya + base, yb + base, h, s, d);
        default: return hermite_value<5>(ya + base, yb + base, h, s, d);
    }
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Trajectory::Trajectory(std::vector<double> t, std::vector<State> y, std::vector<double> d4)
    : t_(std::move(t)), y_(std::move(y)), d4_(std::move(d4)) {
    if (t_.size() != y_.size() || t_.size() < 2) throw DomainError("trajectory needs at least two nodes");
    if (!d4_.empty() && d4_.size() != t_.size()) throw DomainError("fourth-derivative data size mismatch");
    if (t_.front() > t_.back()) {
        std::reverse(t_.begin(), t_.end());
        std::reverse(y_.begin(), y_.end());
        std::reverse(d4_.begin(), d4_.end());
    }
}

Trajectory Trajectory::sample(const std::function<State(double)>& f, double t0, double t1, int panels) {
    std::vector<double> t;
    std::vector<State> y;
    for (int i = 0; i <= panels; ++i) {
        const double ti = t0 + (t1 - t0) * i / panels;
        t.push_back(ti);
        y.push_back(f(ti));
    }
    return Trajectory(std::move(t), std::move(y));
}

double Trajectory::eval(double t, int order) const {
    if (order < 0 || order > 3) throw DomainError("trajectory derivative order must be in [0,3]");
    const double span = t_.back() - t_.front();
    if (t < t_.front() - 1e-12 * (1.0 + span) || t > t_.back() + 1e-12 * (1.0 + span)) {
        throw DomainError("trajectory evaluated outside its range");
    }
    t = std::clamp(t, t_.front(), t_.back());
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t i = (it == t_.begin()) ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
    if (i + 1 >= t_.size()) i = t_.size() - 2;
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    if (s == 0.0) return y_[i](order);
    if (s == 1.0) return y_[i + 1](order);
    double ya[5], yb[5];
    for (int j = 0; j < 4; ++j) {
        ya[j] = y_[i](j);
        yb[j] = y_[i + 1](j);
    }
    if (d4_.empty()) return hermite_derivative(ya, yb, 4, order, h, s);
    ya[4] = d4_[i];
    yb[4] = d4_[i + 1];
    return hermite_derivative(ya, yb, 5, order, h, s);
}

State Trajectory::state(double t) const {
    return State(eval(t, 0), eval(t, 1), eval(t, 2), eval(t, 3));
}

Trajectory Trajectory::scaled(double s) const {
    std::vector<State> y = y_;
    for (auto& v : y) v *= s;
    std::vector<double> d4 = d4_;
    for (auto& v : d4) v *= s;
    return Trajectory(t_, std::move(y), std::move(d4));
}

template <int M>
Trajectory FamilyTrajectory<M>::combine(const Eigen::Matrix<double, M, 1>& coeff) const {
    std::vector<State> ys;
    ys.reserve(y.size());
    for (const auto& m : y) ys.push_back(m * coeff);
    std::vector<double> d;
    if (d4.size() == y.size()) {
        d.reserve(d4.size());
        for (const auto& r : d4) d.push_back(r.dot(coeff.transpose()));
    }
    return Trajectory(t, std::move(ys), std::move(d));
}

template <int M>
FamilyTrajectory<M> integrate_family(const ScalarFn& coeff, const ScalarFn& rhs,
                                     const Eigen::Matrix<double, 1, M>& rhs_mask, double t0, double t1,
                                     const Eigen::Matrix<double, 4, M>& y0, const OdeOptions& opt, bool store) {
    using Mat = Eigen::Matrix<double, 4, M>;
    if (t0 == t1) throw DomainError("integration interval is empty");
    const bool forced = static_cast<bool>(rhs) && !rhs_mask.isZero();

    auto f = [&](double t, const Mat& y) {
        Mat d;
        d.template topRows<3>() = y.template bottomRows<3>();
        d.row(3) = -coeff(t) * y.row(0);
        if (forced) d.row(3) += rhs(t) * rhs_mask;
        return d;
    };

    const double dir = (t1 > t0) ? 1.0 : -1.0;
    const double length = std::abs(t1 - t0);
    const double hmax = opt.max_step > 0.0 ? opt.max_step : length / 8.0;
    double h = std::min(hmax, 1e-3 * length) * dir;

    FamilyTrajectory<M> out;
    double t = t0;
    Mat y = y0;
    if (store) {
        out.t.push_back(t);
        out.y.push_back(y);
    }
    Mat k1 = f(t, y);
    if (store) out.d4.push_back(k1.row(3));
    long steps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > opt.max_steps) throw IntegrationError("step budget exhausted", t);
        bool last = false;
        if (dir * (t + h - t1) >= 0.0) {
            h = t1 - t;
            last = true;
        }
        const Mat k2 = f(t + c2 * h, y + h * (a21 * k1));
        const Mat k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        const Mat k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Mat k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Mat k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Mat ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Mat k7 = f(t + h, ynew);
        const Mat err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const Mat scale = (opt.atol + opt.rtol * y.cwiseAbs().cwiseMax(ynew.cwiseAbs()).array()).matrix();
        const double enorm = std::sqrt((err.array() / scale.array()).square().mean());
        if (!std::isfinite(enorm)) throw IntegrationError("non-finite state", t);

        if (enorm <= 1.0) {
            t = last ? t1 : t + h;
            y = ynew;
            k1 = k7;
            if (store) {
                out.t.push_back(t);
                out.y.push_back(y);
                out.d4.push_back(k1.row(3));
            }
            if (last) break;
        }
        const double fac = enorm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
        h = dir * std::min(hmax, std::abs(h) * (enorm <= 1.0 ? fac : std::min(fac, 1.0)));
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) throw IntegrationError("step size underflow", t);
    }
    if (!store) {
        out.t = {t0, t1};
        out.y = {y0, y};
    }
    return out;
}

template FamilyTrajectory<1> integrate_family<1>(const ScalarFn&, const ScalarFn&, const Eigen::Matrix<double, 1, 1>&,
                                                 double, double, const Eigen::Matrix<double, 4, 1>&,
                                                 const OdeOptions&, bool);
template FamilyTrajectory<2> integrate_family<2>(const ScalarFn&, const ScalarFn&, const Eigen::Matrix<double, 1, 2>&,
                                                 double, double, const Eigen::Matrix<double, 4, 2>&,
                                                 const OdeOptions&, bool);
template FamilyTrajectory<3> integrate_family<3>(const ScalarFn&, const ScalarFn&, const Eigen::Matrix<double, 1, 3>&,
                                                 double, double, const Eigen::Matrix<double, 4, 3>&,
                                                 const OdeOptions&, bool);
template FamilyTrajectory<4> integrate_family<4>(const ScalarFn&, const ScalarFn&, const Eigen::Matrix<double, 1, 4>&,
                                                 double, double, const Eigen::Matrix<double, 4, 4>&,
                                                 const OdeOptions&, bool);
template struct FamilyTrajectory<1>;
template struct FamilyTrajectory<2>;
template struct FamilyTrajectory<3>;
template struct FamilyTrajectory<4>;

IvpResult integrate_ivp(const ScalarFn& coeff, const ScalarFn& rhs, double t0, double t1, const State& y0,
                        const OdeOptions& opt) {
    Eigen::Matrix<double, 1, 1> mask;
    mask(0) = rhs ? 1.0 : 0.0;
    auto fam = integrate_family<1>(coeff, rhs, mask, t0, t1, y0, opt, true);
    IvpResult r;
    r.final_state = fam.y.back();
    r.trajectory = fam.column(0);
    return r;
}

Trajectory particular_solution(const ScalarFn& coeff, const ScalarFn& rhs, double t0, double t1, const State& y0,
                               const OdeOptions& opt) {
    return integrate_ivp(coeff, rhs, t0, t1, y0, opt).trajectory;
}

TransferMatrix fundamental_matrix(const ScalarFn& coeff, double t0, double t1, const OdeOptions& opt) {
    auto fam = integrate_family<4>(coeff, {}, Eigen::Matrix<double, 1, 4>::Zero(), t0, t1, Matrix4::Identity(), opt,
                                   false);
    return TransferMatrix{fam.y.back(), t0, t1};
}

}  // namespace sbspec
