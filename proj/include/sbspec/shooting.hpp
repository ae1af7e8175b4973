#pragma once

// Orthonormalized shooting of two-dimensional solution spaces of u'''' + c u = 0
// through chains of segments, and eigenvalue determinants built from them.

#include <vector>

#include <Eigen/Dense>

#include "sbspec/ode.hpp"
#include "sbspec/piecewise.hpp"

namespace sbspec {

using Frame = Eigen::Matrix<double, 4, 2>;

/// Integration from t0 to t1 of the coefficient c(t) in coordinate t = x / scale.
struct Segment {
    double t0 = 0.0, t1 = 0.0;
    ScalarFn coeff;
    double scale = 1.0;
};

/// Propagation record. The true propagated frame is q * R_total with R_total upper triangular,
/// det R_total = exp(log_det_r) > 0; q is expressed in the native coordinate of the last segment.
struct Propagation {
    Frame q;
    double log_det_r = 0.0;

    struct Step {
        Eigen::Matrix2d r;  // start frame of the next step = (this step's end frame) * r^{-1}
        bool has_trajectory = false;
        FamilyTrajectory<2> family;
        double scale = 1.0;
    };
    std::vector<Step> steps;

    /// Pieces of the solution whose end state is q * c_end.
    std::vector<Piece> reconstruct(const Eigen::Vector2d& c_end) const;
    /// State at the chain start of the solution whose end state is q * c_end (start coordinates).
    State start_state(const Eigen::Vector2d& c_end) const;

    Frame start;
};

/// QR with positive diagonal: frame = Q R.
void positive_qr(const Frame& frame, Frame& q, Eigen::Matrix2d& r);

/// Propagates span(start) (native coordinates of the first segment) through the chain.
Propagation propagate(const std::vector<Segment>& chain, const Frame& start, const OdeOptions& opt = {},
                      bool record = false);

/// Two chains meeting at an interface (or a single chain ending at a boundary).
/// The interface matrix acts on [left end state; right end state] (8 columns)
/// or on the left end state only (4 columns, no right chain).
struct BvpSpec {
    std::vector<Segment> left;
    Frame left_start;
    std::vector<Segment> right;
    Frame right_start;
    Eigen::MatrixXd interface;
};

struct BvpEvaluation {
    double value = 0.0;   // det(interface * blockdiag(qL, qR)); continuous in parameters
    double log_scale = 0.0;  // log of the positive factor relating value to the raw determinant
    Propagation left, right;
    Eigen::MatrixXd matrix;
};

BvpEvaluation evaluate_bvp(const BvpSpec& spec, const OdeOptions& opt = {}, bool record = false);

struct BvpSolution {
    PiecewiseFunction y;
    Eigen::VectorXd singular_values;  // of the interface matrix, descending
    bool multiple = false;            // second-smallest singular value below threshold
    State left_end, right_end;        // end states (native coordinates of the last segments)
    State left_start_state, right_start_state;
};

/// Null solution of the BVP at the current parameters, scaled by an arbitrary constant.
BvpSolution solve_bvp_null(const BvpSpec& spec, const OdeOptions& opt = {}, double multiplicity_tol = 1e-7);

}  // namespace sbspec
