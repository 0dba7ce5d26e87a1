#include "pmsm/control.hpp"
#include "pmsm/simulation.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace pmsm;

namespace {

constexpr double kPi = std::numbers::pi;

// Closed current loop on a plant held at a constant speed; returns the rotor-frame
// currents after each control sample.
std::vector<Dq> closed_loop(const MachineParams& p, double omega, const Dq& ref, double t_end, double Ts = 1e-4) {
    const SpeedProfile profile({{0.0, omega}, {10.0, omega}});
    CurrentController ctrl = CurrentController::from_gains(default_current_gains(p));
    MachineState s;
    s.omega = omega;
    std::vector<Dq> out;
    const int n = static_cast<int>(std::lround(t_end / Ts));
    for (int k = 0; k < n; ++k) {
        const double t = k * Ts;
        const ControllerOutput co = controller_step(ctrl, park(s.current(), s.theta), ref, s.theta, Ts);
        ctrl = co.next;
        for (int j = 0; j < 10; ++j) s = integrate_electrical(s, co.v, profile, t + j * Ts / 10, Ts / 10, p);
        out.push_back(park(s.current(), s.theta));
    }
    return out;
}

}  // namespace

TEST(Pi, ZeroErrorOutputsIntegrator) {
    const PiState pi{2.0, 5.0, 0.7, 10.0};
    const PiOutput o = pi_step(pi, 0.0, 1e-4);
    EXPECT_EQ(o.command, 0.7);
    EXPECT_EQ(o.next.integrator, 0.7);
}

TEST(Pi, ProportionalOnlyWithoutIntegralGain) {
    const PiState pi{3.0, 0.0, 0.0, 100.0};
    const PiOutput o = pi_step(pi, 1.5, 1e-4);
    EXPECT_EQ(o.command, 4.5);
    EXPECT_EQ(o.next.integrator, 0.0);
}

TEST(Pi, IntegratesAndSaturates) {
    PiState pi{1.0, 100.0, 0.0, 2.0};
    PiOutput o = pi_step(pi, 1.0, 0.01);
    EXPECT_EQ(o.command, 1.0);
    EXPECT_DOUBLE_EQ(o.next.integrator, 1.0);
    for (int k = 0; k < 10; ++k) o = pi_step(o.next, 1.0, 0.01);
    EXPECT_EQ(o.command, 2.0);
    EXPECT_EQ(o.next.integrator, 2.0);
    o = pi_step(o.next, -100.0, 0.01);
    EXPECT_EQ(o.command, -2.0);
    EXPECT_THROW(pi_step(pi, 1.0, 0.0), std::invalid_argument);
}

TEST(CurrentReference, ReferenceSetpointsAndWindow) {
    const InjectionSchedule inj = reference_injection();
    const Setpoints base{0.0, 15.0, 0.0};
    for (double t : {0.0, 0.1, 0.1999, 0.5, 0.7}) {
        const Dq r = current_reference(t, inj, base);
        EXPECT_EQ(r.x, 0.0);
        EXPECT_EQ(r.y, 15.0);
    }
    EXPECT_DOUBLE_EQ(current_reference(0.25, inj, base).y, 15.0 + 0.5 * std::sin(1000 * kPi * 0.25));
    // closed at the start, open at the end
    EXPECT_TRUE(inj.active(0.2));
    EXPECT_FALSE(inj.active(0.5));
    EXPECT_DOUBLE_EQ(current_reference(0.2 + 0.25e-3, inj, base).y, 15.0 + 0.5 * std::sin(1000 * kPi * 0.20025));
}

TEST(CurrentReference, ZeroAmplitudeAndRamp) {
    InjectionSchedule inj = reference_injection();
    inj.amplitude = 0.0;
    EXPECT_EQ(current_reference(0.3, inj, {1.0, 15.0, 0.0}).y, 15.0);
    const Setpoints ramped{2.0, 10.0, 0.02};
    EXPECT_DOUBLE_EQ(current_reference(0.01, {}, ramped).y, 5.0);
    EXPECT_DOUBLE_EQ(current_reference(0.01, {}, ramped).x, 1.0);
    EXPECT_EQ(current_reference(0.05, {}, ramped).y, 10.0);
    EXPECT_EQ(current_reference(0.0, {}, ramped).y, 0.0);
}

TEST(Controller, DefaultGainsFromBandwidth) {
    const MachineParams p = reference_ipmsm();
    const CurrentLoopGains g = default_current_gains(p);
    const double wc = 2 * kPi * 500;
    EXPECT_DOUBLE_EQ(g.kp_d, p.Ld() * wc);
    EXPECT_DOUBLE_EQ(g.kp_q, p.Lq() * wc);
    EXPECT_DOUBLE_EQ(g.ki_d, p.R * wc);
    EXPECT_DOUBLE_EQ(g.ki_q, p.R * wc);
    EXPECT_EQ(g.voltage_limit, 50.0);
}

TEST(Controller, ZeroErrorGivesZeroVoltage) {
    const CurrentController c = CurrentController::from_gains(default_current_gains(reference_ipmsm()));
    const ControllerOutput o = controller_step(c, {3.0, 4.0}, {3.0, 4.0}, 0.7, 1e-4);
    EXPECT_EQ(o.v.x, 0.0);
    EXPECT_EQ(o.v.y, 0.0);
}

TEST(Controller, VoltageInjectionOnEstimatedAxis) {
    const CurrentController c = CurrentController::from_gains(default_current_gains(reference_spmsm()));
    const InjectionSchedule inj{InjectionKind::VoltageOnDhat, 2.0, 3000.0, 0.0, 1.0};
    const double th = 1.1, t = 0.0123;
    const ControllerOutput o = controller_step(c, {0.0, 0.0}, {0.0, 0.0}, th, 1e-4, {&inj, t, th});
    const double a = 2.0 * std::cos(3000.0 * t);
    EXPECT_NEAR(o.v.x, a * std::cos(th), 1e-15);
    EXPECT_NEAR(o.v.y, a * std::sin(th), 1e-15);
    // outside the window nothing is added
    const ControllerOutput off = controller_step(c, {0.0, 0.0}, {0.0, 0.0}, th, 1e-4, {&inj, 1.0, th});
    EXPECT_EQ(off.v.norm(), 0.0);
}

TEST(Controller, StepResponseSettlesWithin20ms) {
    for (const MachineParams& p : {reference_ipmsm(), reference_spmsm()}) {
        const auto traj = closed_loop(p, 0.0, {0.0, 10.0}, 0.05);
        int settled = -1;
        for (int k = static_cast<int>(traj.size()) - 1; k >= 0; --k)
            if (std::abs(traj[k].y - 10.0) > 0.5) {
                settled = k + 1;
                break;
            }
        EXPECT_LT(settled * 1e-4, 0.02);
    }
}

TEST(Controller, NonSalientStandstillDecoupling) {
    const auto traj = closed_loop(reference_spmsm(), 0.0, {8.0, 0.0}, 0.03);
    double worst = 0.0;
    for (const Dq& i : traj) worst = std::max(worst, std::abs(i.y));
    EXPECT_LT(worst, 1e-9);
    EXPECT_NEAR(traj.back().x, 8.0, 0.05);
}

TEST(Controller, SteadyStateErrorAtConstantSpeed) {
    const Dq ref{0.0, 15.0};
    const auto traj = closed_loop(reference_ipmsm(), 50.0, ref, 0.6);
    EXPECT_LT((traj.back() - ref).norm(), 1e-3 * ref.norm());
}
