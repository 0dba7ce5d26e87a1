#pragma once

#include "pmsm/machine_model.hpp"

#include <limits>

namespace pmsm {

/// PI regulator with a clamped integrator and saturated output.
struct PiState {
    double kp = 0.0;
    double ki = 0.0;
    double integrator = 0.0;
    double limit = std::numeric_limits<double>::infinity();

    bool operator==(const PiState&) const = default;
};

struct PiOutput {
    double command = 0.0;
    PiState next;
};

/// command = kp e + integrator (saturated to +/- limit); integrator += ki e Ts, clamped.
PiOutput pi_step(const PiState& pi, double error, double Ts);

enum class InjectionKind {
    None,
    CurrentOnQ,    ///< amplitude * sin(frequency t) added to the q-axis current reference [A]
    VoltageOnDhat, ///< amplitude * cos(frequency t) added on the estimated d-axis [V]
};

/// High-frequency excitation active on [t_start, t_end).
struct InjectionSchedule {
    InjectionKind kind = InjectionKind::None;
    double amplitude = 0.0;  ///< A or V depending on kind
    double frequency = 0.0;  ///< rad/s
    double t_start = 0.0;
    double t_end = 0.0;

    bool active(double t) const { return kind != InjectionKind::None && t >= t_start && t < t_end; }
    bool operator==(const InjectionSchedule&) const = default;
};

/// 0.5 A at 500 Hz on the q-axis current during [0.2 s, 0.5 s).
InjectionSchedule reference_injection();

/// Base current set-points. A positive ramp_time slews the references linearly
/// from zero over [0, ramp_time].
struct Setpoints {
    double i_d = 0.0;
    double i_q = 0.0;
    double ramp_time = 0.0;

    bool operator==(const Setpoints&) const = default;
};

Dq current_reference(double t, const InjectionSchedule& schedule, const Setpoints& base);

/// Gains and saturation of the two current loops.
struct CurrentLoopGains {
    double kp_d = 0.0;
    double ki_d = 0.0;
    double kp_q = 0.0;
    double ki_q = 0.0;
    double voltage_limit = 50.0;

    bool operator==(const CurrentLoopGains&) const = default;
};

/// kp = L_axis * wc, ki = R * wc with wc = 2 pi bandwidth_hz.
CurrentLoopGains default_current_gains(const MachineParams& params, double bandwidth_hz = 500.0,
                                       double voltage_limit = 50.0);

struct CurrentController {
    PiState d;
    PiState q;

    static CurrentController from_gains(const CurrentLoopGains& gains);
    bool operator==(const CurrentController&) const = default;
};

struct ControllerOutput {
    AlphaBeta v;
    Dq v_dq;  ///< PI output before injection, in the frame given by theta_for_park
    CurrentController next;
};

/// Inputs needed only when a voltage is injected on the estimated d-axis.
struct InjectionContext {
    const InjectionSchedule* schedule = nullptr;
    double t = 0.0;
    double theta_hat = 0.0;
};

/// Two PI loops in the rotor frame, mapped to the stator frame with theta_for_park.
ControllerOutput controller_step(const CurrentController& ctrl, const Dq& i_meas, const Dq& refs,
                                 double theta_for_park, double Ts, const InjectionContext& injection = {});

}  // namespace pmsm
