#include "pmsm/simulation.hpp"

#include "pmsm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pmsm {

SpeedProfile::SpeedProfile(std::vector<std::pair<double, double>> breakpoints) : points_(std::move(breakpoints)) {
    cumulative_.assign(points_.size(), 0.0);
    if (points_.empty()) return;
    // Integral from the first breakpoint, then shifted so that angle(0) = 0.
    for (std::size_t k = 1; k < points_.size(); ++k) {
        const auto [t0, w0] = points_[k - 1];
        const auto [t1, w1] = points_[k];
        cumulative_[k] = cumulative_[k - 1] + 0.5 * (w0 + w1) * (t1 - t0);
    }
    const double offset = [&] {
        SpeedProfile unshifted;
        unshifted.points_ = points_;
        unshifted.cumulative_ = cumulative_;
        return unshifted.angle(0.0);
    }();
    for (double& c : cumulative_) c -= offset;
}

std::size_t SpeedProfile::segment(double t) const {
    // Index k such that points_[k].first <= t < points_[k+1].first.
    const auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                     [](double v, const std::pair<double, double>& p) { return v < p.first; });
    return static_cast<std::size_t>(std::distance(points_.begin(), it)) - 1;
}

double SpeedProfile::omega(double t) const {
    if (points_.empty()) return 0.0;
    if (t <= points_.front().first) return points_.front().second;
    if (t >= points_.back().first) return points_.back().second;
    const std::size_t k = segment(t);
    const auto [t0, w0] = points_[k];
    const auto [t1, w1] = points_[k + 1];
    return w0 + (w1 - w0) * (t - t0) / (t1 - t0);
}

double SpeedProfile::acceleration(double t) const {
    if (points_.size() < 2 || t < points_.front().first || t >= points_.back().first) return 0.0;
    const std::size_t k = segment(t);
    const auto [t0, w0] = points_[k];
    const auto [t1, w1] = points_[k + 1];
    return (w1 - w0) / (t1 - t0);
}

double SpeedProfile::angle(double t) const {
    if (points_.empty()) return 0.0;
    if (t <= points_.front().first) return cumulative_.front() + points_.front().second * (t - points_.front().first);
    if (t >= points_.back().first) return cumulative_.back() + points_.back().second * (t - points_.back().first);
    const std::size_t k = segment(t);
    const double tau = t - points_[k].first;
    return cumulative_[k] + points_[k].second * tau + 0.5 * acceleration(t) * tau * tau;
}

std::vector<std::string> SpeedProfile::validate(double t_end) const {
    std::vector<std::string> errors;
    if (points_.empty()) {
        errors.emplace_back("speed profile: at least one breakpoint is required");
        return errors;
    }
    for (std::size_t k = 0; k < points_.size(); ++k) {
        if (!std::isfinite(points_[k].first) || !std::isfinite(points_[k].second))
            errors.push_back("speed profile: breakpoint " + std::to_string(k) + " is not finite");
        if (k > 0 && !(points_[k].first > points_[k - 1].first))
            errors.push_back("speed profile: breakpoint times must be strictly increasing (index " +
                             std::to_string(k) + ")");
    }
    if (points_.front().first > 0.0) errors.emplace_back("speed profile: first breakpoint must be at or before t = 0");
    if (points_.back().first < t_end) errors.emplace_back("speed profile: last breakpoint must be at or after t_end");
    return errors;
}

std::vector<std::string> Scenario::validate() const {
    std::vector<std::string> errors = params.validate();
    for (auto& e : profile.validate(t_end)) errors.push_back(std::move(e));
    if (!(t_end > 0.0)) errors.emplace_back("scenario: t_end must be positive");
    if (!(Ts > 0.0)) errors.emplace_back("scenario: Ts must be positive");
    if (ode_substeps < 1) errors.emplace_back("scenario: ode_substeps must be at least 1");
    if (!(noise_std >= 0.0)) errors.emplace_back("scenario: noise_std must be non-negative");
    if (!std::isfinite(theta0) || !std::isfinite(initial_theta_error) || !std::isfinite(initial_omega_hat))
        errors.emplace_back("scenario: initial conditions must be finite");
    if (!(setpoints.ramp_time >= 0.0)) errors.emplace_back("setpoints: ramp_time must be non-negative");
    if (!std::isfinite(setpoints.i_d) || !std::isfinite(setpoints.i_q))
        errors.emplace_back("setpoints: currents must be finite");
    if (injection.kind != InjectionKind::None) {
        if (!(injection.t_end >= injection.t_start)) errors.emplace_back("injection: t_end must not precede t_start");
        if (!(injection.frequency >= 0.0)) errors.emplace_back("injection: frequency must be non-negative");
        if (!std::isfinite(injection.amplitude)) errors.emplace_back("injection: amplitude must be finite");
    }
    if (!(gains.kp_d >= 0.0 && gains.ki_d >= 0.0 && gains.kp_q >= 0.0 && gains.ki_q >= 0.0))
        errors.emplace_back("controller: gains must be non-negative");
    if (!(gains.voltage_limit > 0.0)) errors.emplace_back("controller: voltage_limit must be positive");
    if (!(ekf.q_diag.array() >= 0.0).all()) errors.emplace_back("estimator: Q diagonal must be non-negative");
    if (!(ekf.r_diag.array() > 0.0).all()) errors.emplace_back("estimator: R diagonal must be positive");
    if (!(ekf.p0_diag.array() >= 0.0).all()) errors.emplace_back("estimator: P0 diagonal must be non-negative");
    return errors;
}

Scenario reference_scenario(MachineKind kind) {
    Scenario s;
    s.params = kind == MachineKind::IPMSM ? reference_ipmsm() : reference_spmsm();
    s.profile = SpeedProfile({{0.0, 0.0}, {0.6, 0.0}, {0.8, 50.0}, {1.0, 50.0}});
    s.setpoints = {0.0, 15.0, 0.02};
    s.injection = reference_injection();
    s.gains = default_current_gains(s.params);
    s.t_end = 1.0;
    s.Ts = 1e-4;
    s.ode_substeps = 10;
    s.initial_theta_error = -std::numbers::pi / 4.0;
    return s;
}

MachineState integrate_electrical(const MachineState& state, const AlphaBeta& v, const SpeedProfile& profile,
                                  double t, double dt, const MachineParams& params) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_electrical: dt must be positive");
    const double base = profile.angle(t);
    auto f = [&](const AlphaBeta& i, double tau) {
        const double th = state.theta + (profile.angle(tau) - base);
        return current_derivative_alphabeta(i, profile.omega(tau), th, v, params);
    };
    const AlphaBeta i0 = state.current();
    const AlphaBeta k1 = f(i0, t);
    const AlphaBeta k2 = f(i0 + k1 * (0.5 * dt), t + 0.5 * dt);
    const AlphaBeta k3 = f(i0 + k2 * (0.5 * dt), t + 0.5 * dt);
    const AlphaBeta k4 = f(i0 + k3 * dt, t + dt);
    const AlphaBeta i1 = i0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

    MachineState next = state;
    next.i_alpha = i1.x;
    next.i_beta = i1.y;
    next.omega = profile.omega(t + dt);
    next.theta = state.theta + (profile.angle(t + dt) - base);
    if (!next.finite()) {
        std::ostringstream msg;
        msg << "non-finite plant state at t = " << t + dt;
        throw NumericalError(msg.str());
    }
    return next;
}

std::size_t sample_count(const Scenario& s) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(s.t_end / s.Ts)));
}

namespace {

void fill_observability(TrajectoryRow& row, const ObservabilityReport& rep) {
    row.det_y1 = rep.det_y1;
    row.det_y2 = rep.det_y2;
    row.det_y3 = rep.det_y3;
    row.rank = rep.numeric_rank;
    row.psi_o_d = rep.psi_o_d;
    row.psi_o_q = rep.psi_o_q;
    row.theta_o = rep.theta_o;
    row.margin = rep.margin;
}

void clear_observability(TrajectoryRow& row) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    row.det_y1 = row.det_y2 = row.det_y3 = nan;
    row.rank = -1;
    row.psi_o_d = row.psi_o_q = row.theta_o = row.margin = nan;
}

}  // namespace

TrajectoryLog run_scenario(const Scenario& scn, bool estimator) {
    if (const auto errors = scn.validate(); !errors.empty()) {
        std::string msg = "invalid scenario:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw std::invalid_argument(msg);
    }

    if (!estimator && scn.analysis == AnalysisSource::Estimate)
        throw std::invalid_argument("analysis on estimates requires the estimator");

    const std::size_t n = sample_count(scn);
    const double dt = scn.Ts / scn.ode_substeps;

    MachineState plant;
    plant.theta = scn.theta0;
    plant.omega = scn.profile.omega(0.0);

    EstimatorModel model{scn.params, scn.estimator_mechanics, 0.0};
    EkfState ekf;
    ekf.Ts = scn.Ts;
    ekf.Q = scn.ekf.q_diag.asDiagonal();
    ekf.R_meas = scn.ekf.r_diag.asDiagonal();
    ekf.P = scn.ekf.p0_diag.asDiagonal();
    ekf.x_hat = Vec4(0.0, 0.0, scn.initial_omega_hat, scn.theta0 + scn.initial_theta_error);

    CurrentController ctrl = CurrentController::from_gains(scn.gains);
    std::mt19937_64 rng(scn.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    TrajectoryLog log;
    log.rows.reserve(n);
    Vec2 u_prev = Vec2::Zero();

    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * scn.Ts;
        try {
            Vec2 y = plant.current().vec();
            if (scn.noise_std > 0.0) {
                y[0] += scn.noise_std * noise(rng);
                y[1] += scn.noise_std * noise(rng);
            }
            if (estimator) ekf = k == 0 ? gain_and_innovate(ekf, y) : ekf_step(ekf, model, u_prev, y);
            if (!ekf.x_hat.allFinite() || !ekf.P.allFinite()) throw NumericalError("estimator diverged");

            const Dq i_dq = park(plant.current(), plant.theta);
            const Dq i_ref = current_reference(t, scn.injection, scn.setpoints);
            const InjectionContext inj{&scn.injection, t, ekf.x_hat[3]};
            const ControllerOutput co = controller_step(ctrl, i_dq, i_ref, plant.theta, scn.Ts, inj);
            ctrl = co.next;

            TrajectoryRow row;
            row.t = t;
            row.i = plant.current();
            row.i_dq = i_dq;
            row.i_ref = i_ref;
            row.v = co.v;
            row.omega_true = plant.omega;
            row.theta_true = plant.theta_wrapped();
            if (estimator) {
                row.omega_hat = ekf.x_hat[2];
                row.theta_hat = wrap_angle(ekf.x_hat[3]);
                row.theta_err = wrap_angle(ekf.x_hat[3] - plant.theta);
                row.p_asymmetry = (ekf.P - ekf.P.transpose()).cwiseAbs().maxCoeff();
                row.p_min_diag = ekf.P.diagonal().minCoeff();
            } else {
                constexpr double nan = std::numeric_limits<double>::quiet_NaN();
                row.omega_hat = row.theta_hat = row.theta_err = row.p_asymmetry = row.p_min_diag = nan;
            }
            switch (scn.analysis) {
                case AnalysisSource::TrueState:
                    fill_observability(row, analyze_point(scn.params, t, plant, co.v, scn.profile.acceleration(t)));
                    break;
                case AnalysisSource::Estimate:
                    fill_observability(row, analyze_point(scn.params, t, MachineState::from_vector(ekf.x_hat), co.v, 0.0));
                    break;
                case AnalysisSource::Off:
                    clear_observability(row);
                    break;
            }
            log.rows.push_back(row);

            MachineState next = plant;
            for (int s = 0; s < scn.ode_substeps; ++s)
                next = integrate_electrical(next, co.v, scn.profile, t + s * dt, dt, scn.params);
            // Re-anchor the angle on the exact profile integral to avoid accumulated rounding.
            next.theta = scn.theta0 + scn.profile.angle(t + scn.Ts);
            plant = next;
            u_prev = co.v.vec();
        } catch (const NumericalError& e) {
            log.aborted = true;
            log.abort_time = t;
            log.abort_reason = e.what();
            break;
        }
    }
    return log;
}

}  // namespace pmsm
