#pragma once

#include "pmsm/control.hpp"
#include "pmsm/estimator.hpp"
#include "pmsm/machine_model.hpp"
#include "pmsm/observability.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pmsm {

/// Piecewise-linear electrical speed through (time, omega) breakpoints. Outside
/// the breakpoints the end values are held. The angle is integrated exactly.
class SpeedProfile {
public:
    SpeedProfile() = default;
    explicit SpeedProfile(std::vector<std::pair<double, double>> breakpoints);

    const std::vector<std::pair<double, double>>& breakpoints() const { return points_; }

    double omega(double t) const;
    /// Slope of the segment containing t (right-continuous), zero outside.
    double acceleration(double t) const;
    /// Integral of omega from 0 to t.
    double angle(double t) const;

    /// Empty when the breakpoints are usable for a run ending at t_end.
    std::vector<std::string> validate(double t_end) const;

    bool operator==(const SpeedProfile& o) const { return points_ == o.points_; }

private:
    std::size_t segment(double t) const;

    std::vector<std::pair<double, double>> points_;
    std::vector<double> cumulative_;  ///< integral of omega from 0 to each breakpoint
};

enum class AnalysisSource {
    TrueState,  ///< plant state (default)
    Estimate,   ///< EKF estimate, for diagnostics
    Off,        ///< observability columns are logged as NaN
};

struct EkfTuning {
    Vec4 q_diag{1.0, 1.0, 1e3, 0.1};
    Vec2 r_diag{1.0, 1.0};
    Vec4 p0_diag{1.0, 1.0, 1.0, 1.0};

    bool operator==(const EkfTuning&) const = default;
};

struct Scenario {
    MachineParams params;
    SpeedProfile profile;
    Setpoints setpoints;
    InjectionSchedule injection;
    CurrentLoopGains gains;
    EkfTuning ekf;
    Mechanics estimator_mechanics = Mechanics::ImposedAcceleration;
    AnalysisSource analysis = AnalysisSource::TrueState;
    double t_end = 1.0;
    double Ts = 1e-4;
    int ode_substeps = 10;
    double theta0 = 0.0;               ///< true initial rotor angle
    double initial_theta_error = 0.0;  ///< theta_hat(0) - theta(0)
    double initial_omega_hat = 0.0;
    double noise_std = 0.0;            ///< current measurement noise [A], 0 = off
    std::uint64_t seed = 0;

    /// Lists every violated invariant (including machine and profile checks).
    std::vector<std::string> validate() const;

    bool operator==(const Scenario&) const = default;
};

enum class MachineKind { IPMSM, SPMSM };

/// Reference machine, standstill to 0.6 s with the HF current injection on
/// [0.2, 0.5), then a ramp to 50 rad/s by 0.8 s held to 1.0 s. i_q* = 15 A is
/// reached over a 20 ms ramp; the estimate starts 45 degrees behind.
Scenario reference_scenario(MachineKind kind);

/// One RK4 step of length dt on the currents; omega and theta follow the profile.
/// Throws NumericalError on a non-finite result.
MachineState integrate_electrical(const MachineState& state, const AlphaBeta& v, const SpeedProfile& profile,
                                  double t, double dt, const MachineParams& params);

struct TrajectoryRow {
    double t = 0.0;
    AlphaBeta i;
    Dq i_dq;
    Dq i_ref;
    AlphaBeta v;
    double omega_true = 0.0;
    double theta_true = 0.0;  ///< wrapped
    double omega_hat = 0.0;
    double theta_hat = 0.0;   ///< wrapped
    double theta_err = 0.0;   ///< wrap(theta_hat - theta_true)
    double det_y1 = 0.0;
    double det_y2 = 0.0;
    double det_y3 = 0.0;
    int rank = 0;
    double psi_o_d = 0.0;
    double psi_o_q = 0.0;
    double theta_o = 0.0;
    double margin = 0.0;
    double p_asymmetry = 0.0;  ///< max |P - P^T|
    double p_min_diag = 0.0;
};

struct TrajectoryLog {
    std::vector<TrajectoryRow> rows;
    bool aborted = false;
    double abort_time = 0.0;  ///< start of the control sample that failed
    std::string abort_reason;
};

/// Runs the open-loop observer protocol: the controller uses the true angle and
/// the EKF runs alongside. Numerical failures end the run with a flagged partial log.
/// Throws std::invalid_argument for an invalid scenario.
///
/// With estimator = false the EKF is skipped and its columns are NaN.
TrajectoryLog run_scenario(const Scenario& scenario, bool estimator = true);

/// Number of control samples, round(t_end / Ts) with at least one.
std::size_t sample_count(const Scenario& scenario);

}  // namespace pmsm
