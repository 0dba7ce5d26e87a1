#pragma once

#include "pmsm/machine_model.hpp"
#include "pmsm/observability.hpp"

#include <Eigen/Dense>

namespace pmsm {

/// Extended Kalman filter on x = [i_alpha, i_beta, omega, theta] with the stator
/// currents as measurement. theta_hat is kept unwrapped.
struct EkfState {
    Vec4 x_hat = Vec4::Zero();
    Mat4 P = Mat4::Identity();
    Mat4 Q = Vec4(1.0, 1.0, 1e3, 0.1).asDiagonal();
    Mat2 R_meas = Mat2::Identity();
    double Ts = 1e-4;

    /// Throws std::invalid_argument if P, Q or R_meas break symmetry/definiteness
    /// requirements or Ts <= 0.
    void require_valid() const;
};

/// The electromechanical model the filter runs. Defaults to a random-walk speed
/// (zero acceleration), since the load torque is unknown to the estimator.
struct EstimatorModel {
    MachineParams params;
    Mechanics mechanics = Mechanics::ImposedAcceleration;
    double load_torque = 0.0;  ///< only used with Newton mechanics

    ObservedSystem system() const;
};

struct Linearization {
    Mat4 A;
    Mat24 C;
};

/// A = df/dx (analytic), C = dh/dx = [I2 | 0].
Linearization linearize(const EstimatorModel& model, const Vec4& x_hat, const Vec2& u);

/// Euler state propagation and P <- P + Ts (A P + P A^T) + Q.
EkfState predict(const EkfState& ekf, const EstimatorModel& model, const Vec2& u);

/// Gain, state correction with the current innovation, P <- P - K C P.
EkfState gain_and_innovate(const EkfState& ekf, const Vec2& y_meas);

/// linearize -> predict -> gain -> innovate.
EkfState ekf_step(const EkfState& ekf, const EstimatorModel& model, const Vec2& u, const Vec2& y_meas);

}  // namespace pmsm
