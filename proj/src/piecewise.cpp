#include "sbspec/piecewise.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sbspec/errors.hpp"

namespace sbspec {

namespace {

constexpr std::array<double, 4> kGaussX = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                           0.9602898564975363};
constexpr std::array<double, 4> kGaussW = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                           0.1012285362903763};

double power(double s, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= s;
    return r;
}

}  // namespace

PiecewiseFunction::PiecewiseFunction(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw DomainError("piecewise function needs at least one piece");
    std::sort(pieces_.begin(), pieces_.end(),
              [](const Piece& p, const Piece& q) { return p.x_begin() < q.x_begin(); });
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
        const double gap = pieces_[i].x_begin() - pieces_[i - 1].x_end();
        if (std::abs(gap) > 1e-12 * (1.0 + std::abs(pieces_[i].x_begin()))) {
            throw DomainError("piecewise function pieces are not contiguous");
        }
    }
}

const Piece& PiecewiseFunction::locate(double x, Side side) const {
    if (side == Side::Right) {
        for (const auto& p : pieces_) {
            if (x < p.x_end()) return p;
        }
        return pieces_.back();
    }
    for (const auto& p : pieces_) {
        if (x <= p.x_end()) return p;
    }
    return pieces_.back();
}

double PiecewiseFunction::eval(double x, int order, Side side) const {
    const Piece& p = locate(x, side);
    double t = x / p.scale;
    t = std::clamp(t, p.traj.t_begin(), p.traj.t_end());
    return p.traj.eval(t, order) / power(p.scale, order);
}

State PiecewiseFunction::state(double x, Side side) const {
    const Piece& p = locate(x, side);
    const double t = std::clamp(x / p.scale, p.traj.t_begin(), p.traj.t_end());
    return to_physical(p.traj.state(t), p.scale);
}

std::vector<double> PiecewiseFunction::breakpoints() const {
    std::vector<double> out;
    for (const auto& p : pieces_) {
        for (double t : p.traj.nodes()) out.push_back(p.scale * t);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

PiecewiseFunction PiecewiseFunction::scaled(double s) const {
    std::vector<Piece> ps = pieces_;
    for (auto& p : ps) p.traj = p.traj.scaled(s);
    return PiecewiseFunction(std::move(ps));
}

double integrate_between(const std::vector<double>& breaks, const std::function<double(double)>& g) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double h = breaks[i + 1] - breaks[i];
        if (h <= 0.0) continue;
        const double mid = 0.5 * (breaks[i] + breaks[i + 1]);
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += kGaussW[k] * (g(mid - 0.5 * h * kGaussX[k]) + g(mid + 0.5 * h * kGaussX[k]));
        sum += 0.5 * h * s;
    }
    return sum;
}

std::vector<double> merge_breakpoints(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out;
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

std::vector<double> clip(std::vector<double> v, double lo, double hi) {
    std::vector<double> out;
    out.push_back(lo);
    for (double x : v) {
        if (x > lo && x < hi) out.push_back(x);
    }
    out.push_back(hi);
    return out;
}

}  // namespace

double inner_product(const PiecewiseFunction& f, const PiecewiseFunction& g) {
    const double lo = std::max(f.x_begin(), g.x_begin());
    const double hi = std::min(f.x_end(), g.x_end());
    const auto br = clip(merge_breakpoints(f.breakpoints(), g.breakpoints()), lo, hi);
    return integrate_between(br, [&](double x) { return f.eval(x) * g.eval(x); });
}

double l2_norm(const PiecewiseFunction& f) {
    const auto br = f.breakpoints();
    return std::sqrt(integrate_between(br, [&](double x) {
        const double v = f.eval(x);
        return v * v;
    }));
}

double l2_distance(const PiecewiseFunction& f, const PiecewiseFunction& g) {
    const double lo = std::max(f.x_begin(), g.x_begin());
    const double hi = std::min(f.x_end(), g.x_end());
    const auto br = clip(merge_breakpoints(f.breakpoints(), g.breakpoints()), lo, hi);
    return std::sqrt(integrate_between(br, [&](double x) {
        const double d = f.eval(x) - g.eval(x);
        return d * d;
    }));
}

std::vector<double> trajectory_breakpoints(const Trajectory& t) { return t.nodes(); }

double integrate_trajectory(const Trajectory& f, const Trajectory* g, const std::function<double(double)>& weight) {
    auto br = f.nodes();
    if (g) br = clip(merge_breakpoints(br, g->nodes()), std::max(f.t_begin(), g->t_begin()),
                     std::min(f.t_end(), g->t_end()));
    return integrate_between(br, [&](double t) {
        const double w = weight ? weight(t) : 1.0;
        return w * f.eval(t) * (g ? g->eval(t) : 1.0);
    });
}

}  // namespace sbspec
