#pragma once

// Functions on (a,b) stitched from trajectories, each living in its own
// coordinate t with x = scale * t (inner pieces use t = xi = x / eps).

#include <functional>
#include <vector>

#include "sbspec/ode.hpp"

namespace sbspec {

enum class Side { Left, Right };

struct Piece {
    Trajectory traj;
    double scale = 1.0;

    double x_begin() const { return scale * traj.t_begin(); }
    double x_end() const { return scale * traj.t_end(); }
};

class PiecewiseFunction {
public:
    PiecewiseFunction() = default;
    explicit PiecewiseFunction(std::vector<Piece> pieces);

    bool empty() const noexcept { return pieces_.empty(); }
    const std::vector<Piece>& pieces() const noexcept { return pieces_; }
    double x_begin() const { return pieces_.front().x_begin(); }
    double x_end() const { return pieces_.back().x_end(); }

    /// order-th x-derivative (0..3). At a junction `side` picks the one-sided limit.
    double eval(double x, int order = 0, Side side = Side::Right) const;
    /// (u, u', u'', u''') in x.
    State state(double x, Side side = Side::Right) const;

    /// Piece endpoints and integration nodes in x, sorted and deduplicated.
    std::vector<double> breakpoints() const;

    PiecewiseFunction scaled(double s) const;

private:
    const Piece& locate(double x, Side side) const;
    std::vector<Piece> pieces_;  // ordered by x, contiguous
};

/// int over [lo,hi] of g, 8-point Gauss-Legendre on every interval between the given sorted breakpoints.
double integrate_between(const std::vector<double>& breaks, const std::function<double(double)>& g);

std::vector<double> merge_breakpoints(const std::vector<double>& a, const std::vector<double>& b);

double inner_product(const PiecewiseFunction& f, const PiecewiseFunction& g);
double l2_norm(const PiecewiseFunction& f);
/// ||f - g|| on the common range; breakpoints of both functions are honoured.
double l2_distance(const PiecewiseFunction& f, const PiecewiseFunction& g);

/// Breakpoints of a single trajectory in its own coordinate.
std::vector<double> trajectory_breakpoints(const Trajectory& t);
/// int weight(t) * f(t) * g(t) dt over the trajectory range (g may be null for a linear functional).
double integrate_trajectory(const Trajectory& f, const Trajectory* g, const std::function<double(double)>& weight);

}  // namespace sbspec
