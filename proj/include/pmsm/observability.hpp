#pragma once

#include "pmsm/machine_model.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

namespace pmsm {

/// Observer model families. Each has four states and the stator currents as output.
///   Electromechanical: x = [i_alpha, i_beta, omega, theta]
///   BackEmf:           x = [i_alpha, i_beta, e_alpha, e_beta]
///   Flux:              x = [i_alpha, i_beta, psi_alpha, psi_beta]
enum class ModelKind { Electromechanical, BackEmf, Flux };

/// Mechanical rows of the electromechanical model.
enum class Mechanics {
    Newton,               ///< domega/dt = p/J (Tm - Tl), dtheta/dt = omega
    ImposedAcceleration,  ///< domega/dt = constant acceleration, dtheta/dt = omega
    Locked,               ///< domega/dt = 0, dtheta/dt = 0 (speed identically zero)
};

/// A model together with the exogenous quantities held constant while Lie
/// derivatives are composed.
struct ObservedSystem {
    ModelKind kind = ModelKind::Electromechanical;
    MachineParams params;
    Mechanics mechanics = Mechanics::Newton;
    double load_torque = 0.0;   ///< Newton mechanics
    double acceleration = 0.0;  ///< ImposedAcceleration mechanics
    double omega = 0.0;         ///< rotor speed for BackEmf and Flux models
    double omega_dot = 0.0;     ///< rotor acceleration for the BackEmf model
};

/// f(x, u). Throws NumericalError if the result is not finite (e.g. the back-EMF
/// model at zero speed).
Vec4 vector_field(const ObservedSystem& system, const Vec4& x, const Vec2& u);

/// Step sizes of the nested finite-difference gradients. Entry k-1 is used when
/// differentiating the k-th Lie derivative. Non-angular states use
/// steps[k-1] * max(1, |x_i|); the rotor angle uses angle_steps[k-1] as an
/// absolute increment.
///
/// Up to order 3 the Lie derivatives are polynomials of degree <= 4 in the
/// currents and the speed, which the five-point stencil differentiates exactly,
/// so those steps are large to keep nested rounding noise down. Only the angle
/// direction carries truncation error.
struct FiniteDifferenceOptions {
    std::array<double, 3> steps{1.0, 1.0, 1.0};
    std::array<double, 3> angle_steps{1e-3, 1e-2, 5e-2};
};

/// Stacked gradients of L_f^k h for k = 0..orders, shape 2(orders+1) x 4.
///
/// Reference implementation for all closed-form results: every gradient is taken
/// by a five-point central difference of the previous Lie derivative, with the
/// input held constant. orders must be in [0, 3].
Eigen::MatrixXd lie_gradient_stack(const ObservedSystem& system, const Vec4& x, const Vec2& u, int orders,
                                   const FiniteDifferenceOptions& options = {});

/// Determinant of the 4x4 sub-matrix made of the output rows and the rows of
/// derivative order `order` (1..3).
double stack_minor_det(const Eigen::MatrixXd& stack, int order);

/// Analytic d(dI/dt)/dx of the stator-frame model, shape 2x4.
Mat24 current_derivative_jacobian(const Vec4& x, const Vec2& u, const MachineParams& params);

/// Partial observability matrix d(y, dy/dt)/dx, evaluated analytically.
Mat4 obs_matrix_y1_ipmsm(const Vec4& x, const Vec2& u, const MachineParams& params);

/// Closed-form determinant of the partial observability matrix in rotor-frame
/// quantities. di_dt is the time derivative of the rotor-frame current.
double det_y1_ipmsm(const Dq& i, const Dq& di_dt, double omega, const MachineParams& params);

/// Observability vector (active flux on d, saliency term on q). theta is empty
/// when the vector vanishes.
struct ObservabilityVector {
    double d = 0.0;
    double q = 0.0;
    std::optional<double> theta;

    bool degenerate() const { return !theta.has_value(); }
};

ObservabilityVector observability_vector(const Dq& i, const MachineParams& params);

/// omega - d(theta_O)/dt, with the phase rate taken analytically from di_dt.
/// Throws std::domain_error when the observability vector is zero.
double observability_margin(const Dq& i, const Dq& di_dt, double omega, const MachineParams& params);

// Non-salient machine closed forms. All throw std::invalid_argument when L2 != 0.
double spmsm_det_y1(double omega, const MachineParams& params);
double spmsm_det_y2(double omega, double domega_dt, double i_d, const MachineParams& params);
/// Third-order determinant under omega = 0, domega/dt = 0 and constant load.
double spmsm_det_y3_at_singularity(double i_d, double di_q_dt, const MachineParams& params);
/// d2omega/dt2 at standstill for a non-salient machine.
double spmsm_speed_second_derivative(double di_q_dt, const MachineParams& params);

struct StandstillAnalysis {
    Eigen::Matrix<double, 8, 4> matrix;
    int rank = 0;
};

/// Explicit 8x4 observability matrix of the non-salient machine held at zero speed.
StandstillAnalysis spmsm_rank_at_standstill(const MachineParams& params, double theta);

/// Partial determinant with a d-axis voltage V_hf cos(omega_hf t) injected in the
/// estimated frame; theta_err is the position estimation error.
double hfi_det_y1(double omega, double theta_err, double t, double V_hf, double omega_hf,
                  const MachineParams& params);

struct AugmentedRank {
    int rank = 0;
    bool degenerate = false;  ///< a == 0: the extra output carries no position information
};

/// Rank at standstill when a position-dependent signal g(theta) = a theta + b is
/// appended to the measured currents.
AugmentedRank augmented_output_rank(const MachineParams& params, double theta, double a, double b);

/// Partial determinant of the back-EMF model: 1/L0^2 regardless of the state.
double emf_model_det(const MachineParams& params);

/// First-, second- and third-order determinants of the flux model.
std::array<double, 3> flux_model_dets(double omega, const MachineParams& params);

struct EmfReconstruction {
    std::optional<double> theta;  ///< empty at zero back-EMF (position indeterminate)
    double omega = 0.0;           ///< speed magnitude
};

EmfReconstruction reconstruct_from_emf(double e_alpha, double e_beta, const MachineParams& params);

/// Per-sample observability figures of the electromechanical model.
struct ObservabilityReport {
    double time = 0.0;
    double det_y1 = 0.0;
    double det_y2 = 0.0;
    double det_y3 = 0.0;
    std::vector<double> singular_values;
    int numeric_rank = 0;
    double psi_o_d = 0.0;
    double psi_o_q = 0.0;
    double theta_o = 0.0;  ///< NaN when the observability vector is zero
    double margin = 0.0;   ///< NaN when the observability vector is zero
};

/// Evaluates the report at one state of a machine whose speed trajectory is
/// imposed externally (the mechanical rows use the imposed acceleration).
ObservabilityReport analyze_point(const MachineParams& params, double time, const MachineState& state,
                                  const AlphaBeta& voltage, double acceleration,
                                  const FiniteDifferenceOptions& options = {});

}  // namespace pmsm
