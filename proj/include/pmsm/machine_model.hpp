#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace pmsm {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat24 = Eigen::Matrix<double, 2, 4>;

/// Electrical and mechanical constants of one permanent magnet synchronous machine.
///
/// The inductances are stored as the average/differential pair (L0, L2) used by the
/// stator-frame model; the rotor-frame pair (Ld, Lq) is derived. L2 may be negative.
/// A machine is non-salient (SPMSM) iff L2 == 0 exactly.
struct MachineParams {
    double R = 0.0;       ///< stator phase resistance [ohm]
    double L0 = 0.0;      ///< average inductance [H]
    double L2 = 0.0;      ///< differential inductance [H], signed
    double psi_r = 0.0;   ///< rotor PM flux [V.s/rad]
    int pole_pairs = 1;   ///< pole-pair count
    double J = 0.0;       ///< rotor + load inertia [kg.m^2]

    double Ld() const { return L0 + L2; }
    double Lq() const { return L0 - L2; }
    double L_delta() const { return 2.0 * L2; }
    bool salient() const { return L2 != 0.0; }

    /// Builds parameters from the rotor-frame inductances.
    static MachineParams from_dq(double R, double Ld, double Lq, double psi_r, int pole_pairs, double J);

    /// Lists every violated invariant; empty when the parameters are usable.
    std::vector<std::string> validate() const;

    /// Throws std::invalid_argument listing all violations.
    void require_valid() const;

    bool operator==(const MachineParams&) const = default;
};

/// Interior PM machine used in the reference study (Ld = 0.5 mH, Lq = 0.8 mH).
/// The inertia is not part of the published table; 1e-3 kg.m^2 is used.
MachineParams reference_ipmsm();

/// Same machine with the saliency removed (L2 = 0).
MachineParams reference_spmsm();

enum class Frame { AlphaBeta, DQ };

/// Two-component vector bound to a reference frame at compile time, so that
/// stator- and rotor-frame quantities cannot be mixed.
template <Frame F>
struct FrameVec {
    double x = 0.0;
    double y = 0.0;

    static constexpr Frame frame = F;

    Vec2 vec() const { return {x, y}; }
    static FrameVec from(const Vec2& v) { return {v.x(), v.y()}; }
    double norm() const { return vec().norm(); }

    FrameVec operator+(const FrameVec& o) const { return {x + o.x, y + o.y}; }
    FrameVec operator-(const FrameVec& o) const { return {x - o.x, y - o.y}; }
    FrameVec operator*(double k) const { return {k * x, k * y}; }
    bool operator==(const FrameVec&) const = default;
};

using AlphaBeta = FrameVec<Frame::AlphaBeta>;
using Dq = FrameVec<Frame::DQ>;

/// Plant state in the stator frame plus the imposed load torque.
struct MachineState {
    double i_alpha = 0.0;
    double i_beta = 0.0;
    double omega = 0.0;        ///< electrical speed [rad/s]
    double theta = 0.0;        ///< electrical position [rad], unwrapped
    double load_torque = 0.0;  ///< [N.m]

    AlphaBeta current() const { return {i_alpha, i_beta}; }
    double theta_wrapped() const;
    Vec4 vector() const { return {i_alpha, i_beta, omega, theta}; }
    bool finite() const;

    static MachineState from_vector(const Vec4& x, double load_torque = 0.0);

    bool operator==(const MachineState&) const = default;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// Unit vector C(theta) = [cos, sin].
Vec2 flux_direction(double theta);
/// dC/dtheta = [-sin, cos].
Vec2 flux_direction_derivative(double theta);

/// Position-dependent stator inductance matrix.
Mat2 inductance_matrix(double theta, const MachineParams& params);

struct InductanceDerivatives {
    Mat2 first;   ///< dL/dtheta
    Mat2 second;  ///< d2L/dtheta2
};

InductanceDerivatives inductance_matrix_derivs(double theta, const MachineParams& params);

/// Rotation into the rotor frame (by -theta).
Dq park(const AlphaBeta& x, double theta);
/// Rotation back into the stator frame (by +theta).
AlphaBeta inverse_park(const Dq& x, double theta);

/// Time derivative of the plant state.
struct StateDerivative {
    AlphaBeta di;          ///< [A/s]
    double domega = 0.0;   ///< [rad/s^2]
    double dtheta = 0.0;   ///< [rad/s]
};

struct DqDerivative {
    Dq di;                 ///< time derivative of the rotor-frame currents [A/s]
    double domega = 0.0;
    double dtheta = 0.0;
};

/// Current derivative of the stator-frame model:
///   dI/dt = L^-1 (V - (R + omega L') I - psi_r C'(theta) omega)
AlphaBeta current_derivative_alphabeta(const AlphaBeta& i, double omega, double theta,
                                       const AlphaBeta& v, const MachineParams& params);

StateDerivative dynamics_alphabeta(const MachineState& state, const AlphaBeta& v,
                                   const MachineParams& params);

double torque_alphabeta(const MachineState& state, const MachineParams& params);

/// Rotor-frame model. The returned di is the true time derivative of park(I, theta).
DqDerivative dynamics_dq(const Dq& i, double omega, const Dq& v, double load_torque,
                         const MachineParams& params);

double torque_dq(const Dq& i, const MachineParams& params);

}  // namespace pmsm
