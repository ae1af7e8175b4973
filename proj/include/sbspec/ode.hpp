#pragma once

// Integration kernel for linear fourth-order equations u'''' + c(t) u = f(t),
// written as the first-order system for the state (u, u', u'', u''').

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace sbspec {

using ScalarFn = std::function<double(double)>;
using State = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    /// Upper bound on |h|; 0 means |t1 - t0| / 8.
    double max_step = 0.0;
    long max_steps = 2'000'000;
};

/// Dense output for a scalar solution. Nodes carry the full state, so the
/// solution is reconstructed between nodes by two-point Hermite interpolation
/// of degree 7, or degree 9 when the fourth derivative at the nodes is known.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::vector<double> t, std::vector<State> y, std::vector<double> d4 = {});

    /// A trajectory sampled from an analytic function with known derivatives.
    static Trajectory sample(const std::function<State(double)>& f, double t0, double t1, int panels);

    bool empty() const noexcept { return t_.empty(); }
    double t_begin() const { return t_.front(); }
    double t_end() const { return t_.back(); }
    const std::vector<double>& nodes() const noexcept { return t_; }
    const std::vector<State>& states() const noexcept { return y_; }
    const std::vector<double>& fourth_derivatives() const noexcept { return d4_; }
    const State& front_state() const { return y_.front(); }
    const State& back_state() const { return y_.back(); }

    /// order-th derivative (0..3) at t; t must lie in [t_begin, t_end].
    double eval(double t, int order = 0) const;
    State state(double t) const;

    Trajectory scaled(double s) const;

private:
    std::vector<double> t_;  // strictly increasing
    std::vector<State> y_;
    std::vector<double> d4_;  // empty or one per node
};

/// Node-synchronous states of M solutions propagated together.
template <int M>
struct FamilyTrajectory {
    std::vector<double> t;  // in integration order
    std::vector<Eigen::Matrix<double, 4, M>> y;
    std::vector<Eigen::Matrix<double, 1, M>> d4;

    /// Trajectory of the linear combination sum_j coeff_j * column_j.
    Trajectory combine(const Eigen::Matrix<double, M, 1>& coeff) const;
    Trajectory column(int j) const {
        Eigen::Matrix<double, M, 1> e = Eigen::Matrix<double, M, 1>::Zero();
        e(j) = 1.0;
        return combine(e);
    }
};

/// Solves u'''' + coeff(t) u = rhs(t) * mask_j for each column j from t0 to t1
/// (t1 < t0 integrates backwards) with an embedded Dormand-Prince 5(4) pair.
/// Throws IntegrationError on step-size underflow or non-finite states.
template <int M>
FamilyTrajectory<M> integrate_family(const ScalarFn& coeff, const ScalarFn& rhs,
                                     const Eigen::Matrix<double, 1, M>& rhs_mask, double t0, double t1,
                                     const Eigen::Matrix<double, 4, M>& y0, const OdeOptions& opt = {},
                                     bool store = true);

struct IvpResult {
    State final_state;
    Trajectory trajectory;
};

/// Single solution of u'''' + coeff u = rhs with initial state y0 at t0.
/// An empty rhs function means rhs = 0.
IvpResult integrate_ivp(const ScalarFn& coeff, const ScalarFn& rhs, double t0, double t1, const State& y0,
                        const OdeOptions& opt = {});

/// Same as integrate_ivp, kept separate to mirror the forced corrector problems.
Trajectory particular_solution(const ScalarFn& coeff, const ScalarFn& rhs, double t0, double t1,
                               const State& y0, const OdeOptions& opt = {});

struct TransferMatrix {
    Matrix4 m;
    double t0 = 0.0, t1 = 0.0;
};

/// Column j is the state at t1 of the homogeneous solution started from e_j at t0.
TransferMatrix fundamental_matrix(const ScalarFn& coeff, double t0, double t1, const OdeOptions& opt = {});

/// Bilinear concomitant u'''w - u''w' + u'w'' - uw''' of two states.
inline double lagrange_concomitant(const State& u, const State& w) {
    return u(3) * w(0) - u(2) * w(1) + u(1) * w(2) - u(0) * w(3);
}

/// Converts a state between coordinates x and xi = x / scale: derivative j picks up scale^j.
inline State to_native(const State& x_state, double scale) {
    return State(x_state(0), x_state(1) * scale, x_state(2) * scale * scale, x_state(3) * scale * scale * scale);
}
inline State to_physical(const State& native, double scale) {
    return State(native(0), native(1) / scale, native(2) / (scale * scale), native(3) / (scale * scale * scale));
}

}  // namespace sbspec
