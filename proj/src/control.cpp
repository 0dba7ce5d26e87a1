#include "pmsm/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pmsm {

PiOutput pi_step(const PiState& pi, double error, double Ts) {
    if (!(Ts > 0.0)) throw std::invalid_argument("pi_step: Ts must be positive");
    PiOutput out;
    out.command = std::clamp(pi.kp * error + pi.integrator, -pi.limit, pi.limit);
    out.next = pi;
    out.next.integrator = std::clamp(pi.integrator + pi.ki * error * Ts, -pi.limit, pi.limit);
    return out;
}

InjectionSchedule reference_injection() {
    return {InjectionKind::CurrentOnQ, 0.5, 1000.0 * std::numbers::pi, 0.2, 0.5};
}

Dq current_reference(double t, const InjectionSchedule& schedule, const Setpoints& base) {
    const double scale = base.ramp_time > 0.0 ? std::min(1.0, std::max(0.0, t) / base.ramp_time) : 1.0;
    Dq ref{scale * base.i_d, scale * base.i_q};
    if (schedule.kind == InjectionKind::CurrentOnQ && schedule.active(t))
        ref.y += schedule.amplitude * std::sin(schedule.frequency * t);
    return ref;
}

CurrentLoopGains default_current_gains(const MachineParams& params, double bandwidth_hz, double voltage_limit) {
    const double wc = 2.0 * std::numbers::pi * bandwidth_hz;
    return {params.Ld() * wc, params.R * wc, params.Lq() * wc, params.R * wc, voltage_limit};
}

CurrentController CurrentController::from_gains(const CurrentLoopGains& g) {
    CurrentController c;
    c.d = {g.kp_d, g.ki_d, 0.0, g.voltage_limit};
    c.q = {g.kp_q, g.ki_q, 0.0, g.voltage_limit};
    return c;
}

ControllerOutput controller_step(const CurrentController& ctrl, const Dq& i_meas, const Dq& refs,
                                 double theta_for_park, double Ts, const InjectionContext& injection) {
    const PiOutput d = pi_step(ctrl.d, refs.x - i_meas.x, Ts);
    const PiOutput q = pi_step(ctrl.q, refs.y - i_meas.y, Ts);

    ControllerOutput out;
    out.v_dq = {d.command, q.command};
    out.next = {d.next, q.next};
    out.v = inverse_park(out.v_dq, theta_for_park);

    const InjectionSchedule* s = injection.schedule;
    if (s != nullptr && s->kind == InjectionKind::VoltageOnDhat && s->active(injection.t)) {
        const Dq hf{s->amplitude * std::cos(s->frequency * injection.t), 0.0};
        out.v = out.v + inverse_park(hf, injection.theta_hat);
    }
    return out;
}

}  // namespace pmsm
