#include "sbspec/shooting.hpp"

#include <algorithm>
#include <cmath>

#include "sbspec/errors.hpp"

namespace sbspec {

namespace {

constexpr int kCoeffSamples = 33;

Eigen::Vector4d native_factors(double scale) {
    return Eigen::Vector4d(1.0, scale, scale * scale, scale * scale * scale);
}

// Chunk length so that solutions grow by about e^4 between re-orthonormalizations.
double chunk_length(const Segment& s) {
    double cmax = 0.0;
    for (int i = 0; i < kCoeffSamples; ++i) {
        const double t = s.t0 + (s.t1 - s.t0) * i / (kCoeffSamples - 1);
        cmax = std::max(cmax, std::abs(s.coeff(t)));
    }
    const double len = std::abs(s.t1 - s.t0);
    if (cmax == 0.0) return len;
    return std::min(len, 4.0 / std::pow(cmax, 0.25));
}

}  // namespace

void positive_qr(const Frame& frame, Frame& q, Eigen::Matrix2d& r) {
    Eigen::HouseholderQR<Frame> qr(frame);
    const Eigen::Matrix4d full_q = qr.householderQ();
    q = full_q.leftCols<2>();
    r = qr.matrixQR().topRows<2>().triangularView<Eigen::Upper>();
    for (int j = 0; j < 2; ++j) {
        if (r(j, j) < 0.0) {
            r.row(j) *= -1.0;
            q.col(j) *= -1.0;
        }
    }
    if (!(r(0, 0) > 0.0 && r(1, 1) > 0.0)) throw IntegrationError("propagated frame lost rank", 0.0);
}

Propagation propagate(const std::vector<Segment>& chain, const Frame& start, const OdeOptions& opt, bool record) {
    if (chain.empty()) throw DomainError("empty shooting chain");
    Propagation out;
    out.start = start;
    Frame q;
    Eigen::Matrix2d r;
    positive_qr(start, q, r);
    out.log_det_r = std::log(r(0, 0) * r(1, 1));
    if (record) out.steps.push_back({r, false, {}, chain.front().scale});

    const Eigen::Matrix<double, 1, 2> no_forcing = Eigen::Matrix<double, 1, 2>::Zero();
    for (std::size_t si = 0; si < chain.size(); ++si) {
        const Segment& seg = chain[si];
        if (si > 0) {
            const Eigen::Vector4d conv =
                native_factors(seg.scale).cwiseQuotient(native_factors(chain[si - 1].scale));
            const Frame converted = conv.asDiagonal() * q;
            positive_qr(converted, q, r);
            out.log_det_r += std::log(r(0, 0) * r(1, 1));
            if (record) out.steps.push_back({r, false, {}, seg.scale});
        }
        const double len = std::abs(seg.t1 - seg.t0);
        const int chunks = std::max(1, static_cast<int>(std::ceil(len / chunk_length(seg) - 1e-9)));
        for (int c = 0; c < chunks; ++c) {
            const double ta = seg.t0 + (seg.t1 - seg.t0) * c / chunks;
            const double tb = (c + 1 == chunks) ? seg.t1 : seg.t0 + (seg.t1 - seg.t0) * (c + 1) / chunks;
            auto fam = integrate_family<2>(seg.coeff, {}, no_forcing, ta, tb, q, opt, record);
            const Frame end = fam.y.back();
            positive_qr(end, q, r);
            out.log_det_r += std::log(r(0, 0) * r(1, 1));
            if (record) {
                Propagation::Step st{r, true, std::move(fam), seg.scale};
                out.steps.push_back(std::move(st));
            }
        }
    }
    out.q = q;
    return out;
}

std::vector<Piece> Propagation::reconstruct(const Eigen::Vector2d& c_end) const {
    if (steps.empty()) throw DomainError("propagation was not recorded");
    std::vector<Piece> pieces;
    Eigen::Vector2d c = c_end;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
        c = it->r.triangularView<Eigen::Upper>().solve(c);
        if (it->has_trajectory) pieces.push_back(Piece{it->family.combine(c), it->scale});
    }
    return pieces;
}

State Propagation::start_state(const Eigen::Vector2d& c_end) const {
    Eigen::Vector2d c = c_end;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) c = it->r.triangularView<Eigen::Upper>().solve(c);
    // c now holds the coefficients of the original start frame
    return start * c;
}

BvpEvaluation evaluate_bvp(const BvpSpec& spec, const OdeOptions& opt, bool record) {
    BvpEvaluation ev;
    ev.left = propagate(spec.left, spec.left_start, opt, record);
    ev.log_scale = ev.left.log_det_r;
    if (spec.right.empty()) {
        if (spec.interface.rows() != 2 || spec.interface.cols() != 4) {
            throw DomainError("single-chain problem needs a 2x4 end condition");
        }
        ev.matrix = spec.interface * ev.left.q;
    } else {
        if (spec.interface.rows() != 4 || spec.interface.cols() != 8) {
            throw DomainError("interface problem needs a 4x8 condition matrix");
        }
        ev.right = propagate(spec.right, spec.right_start, opt, record);
        ev.log_scale += ev.right.log_det_r;
        Eigen::Matrix<double, 8, 4> blocks = Eigen::Matrix<double, 8, 4>::Zero();
        blocks.topLeftCorner<4, 2>() = ev.left.q;
        blocks.bottomRightCorner<4, 2>() = ev.right.q;
        ev.matrix = spec.interface * blocks;
    }
    ev.value = ev.matrix.determinant();
    return ev;
}

BvpSolution solve_bvp_null(const BvpSpec& spec, const OdeOptions& opt, double multiplicity_tol) {
    auto ev = evaluate_bvp(spec, opt, true);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ev.matrix, Eigen::ComputeFullV);
    BvpSolution sol;
    sol.singular_values = svd.singularValues();
    const auto n = sol.singular_values.size();
    sol.multiple = sol.singular_values(n - 2) < multiplicity_tol * sol.singular_values(0);
    const Eigen::VectorXd null = svd.matrixV().col(n - 1);

    const Eigen::Vector2d cl = null.head<2>();
    std::vector<Piece> pieces = ev.left.reconstruct(cl);
    sol.left_end = ev.left.q * cl;
    sol.left_start_state = ev.left.start_state(cl);
    if (!spec.right.empty()) {
        const Eigen::Vector2d cr = null.tail<2>();
        auto rp = ev.right.reconstruct(cr);
        pieces.insert(pieces.end(), rp.begin(), rp.end());
        sol.right_end = ev.right.q * cr;
        sol.right_start_state = ev.right.start_state(cr);
    }
    sol.y = PiecewiseFunction(std::move(pieces));
    return sol;
}

}  // namespace sbspec
