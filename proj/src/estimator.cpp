#include "pmsm/estimator.hpp"

#include "pmsm/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace pmsm {

namespace {

Mat24 measurement_matrix() {
    Mat24 C = Mat24::Zero();
    C.leftCols<2>().setIdentity();
    return C;
}

template <typename M>
M symmetrized(const M& m) {
    return 0.5 * (m + m.transpose());
}

// d Tm / dx for the stator-frame torque expression.
Eigen::RowVector4d torque_gradient(const Vec4& x, const MachineParams& p) {
    const double ia = x[0];
    const double ib = x[1];
    const double th = x[3];
    const double c = std::cos(th), s = std::sin(th);
    const double c2 = std::cos(2.0 * th), s2 = std::sin(2.0 * th);
    const double k = 1.5 * p.pole_pairs;
    Eigen::RowVector4d g;
    g[0] = k * (-p.psi_r * s - p.L2 * (2.0 * ia * s2 - 2.0 * ib * c2));
    g[1] = k * (p.psi_r * c - p.L2 * (-2.0 * ib * s2 - 2.0 * ia * c2));
    g[2] = 0.0;
    g[3] = k * (-p.psi_r * (ib * s + ia * c) - p.L2 * (2.0 * (ia * ia - ib * ib) * c2 + 4.0 * ia * ib * s2));
    return g;
}

}  // namespace

void EkfState::require_valid() const {
    if (!(Ts > 0.0)) throw std::invalid_argument("EKF sampling period must be positive");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 0.0) throw std::invalid_argument("Q must be symmetric");
    if ((R_meas - R_meas.transpose()).cwiseAbs().maxCoeff() > 0.0)
        throw std::invalid_argument("R_meas must be symmetric");
    if (Eigen::SelfAdjointEigenSolver<Mat4>(Q).eigenvalues().minCoeff() < 0.0)
        throw std::invalid_argument("Q must be positive semidefinite");
    if (Eigen::SelfAdjointEigenSolver<Mat2>(R_meas).eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("R_meas must be positive definite");
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + P.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("P must be symmetric");
}

ObservedSystem EstimatorModel::system() const {
    ObservedSystem sys;
    sys.params = params;
    sys.mechanics = mechanics;
    sys.load_torque = load_torque;
    return sys;
}

Linearization linearize(const EstimatorModel& model, const Vec4& x_hat, const Vec2& u) {
    Linearization lin;
    lin.A.setZero();
    lin.A.topRows<2>() = current_derivative_jacobian(x_hat, u, model.params);
    switch (model.mechanics) {
        case Mechanics::Newton:
            lin.A.row(2) = model.params.pole_pairs / model.params.J * torque_gradient(x_hat, model.params);
            lin.A(3, 2) = 1.0;
            break;
        case Mechanics::ImposedAcceleration:
            lin.A(3, 2) = 1.0;
            break;
        case Mechanics::Locked:
            break;
    }
    lin.C = measurement_matrix();
    return lin;
}

EkfState predict(const EkfState& ekf, const EstimatorModel& model, const Vec2& u) {
    const Linearization lin = linearize(model, ekf.x_hat, u);
    EkfState next = ekf;
    next.x_hat = ekf.x_hat + ekf.Ts * vector_field(model.system(), ekf.x_hat, u);
    next.P = symmetrized(Mat4(ekf.P + ekf.Ts * (lin.A * ekf.P + ekf.P * lin.A.transpose()) + ekf.Q));
    if (!next.x_hat.allFinite() || !next.P.allFinite()) throw NumericalError("EKF prediction is not finite");
    return next;
}

EkfState gain_and_innovate(const EkfState& ekf, const Vec2& y_meas) {
    const Mat24 C = measurement_matrix();
    const Mat2 S = C * ekf.P * C.transpose() + ekf.R_meas;
    Eigen::LLT<Mat2> llt(S);
    if (llt.info() != Eigen::Success) throw NumericalError("EKF innovation covariance is not positive definite");
    const Eigen::Matrix<double, 4, 2> K = (llt.solve(C * ekf.P)).transpose();  // P C^T S^-1, S and P symmetric

    EkfState next = ekf;
    next.x_hat = ekf.x_hat + K * (y_meas - C * ekf.x_hat);
    next.P = symmetrized(Mat4(ekf.P - K * C * ekf.P));
    if (!next.x_hat.allFinite() || !next.P.allFinite()) throw NumericalError("EKF update is not finite");
    return next;
}

EkfState ekf_step(const EkfState& ekf, const EstimatorModel& model, const Vec2& u, const Vec2& y_meas) {
    return gain_and_innovate(predict(ekf, model, u), y_meas);
}

}  // namespace pmsm
