#include "pmsm/errors.hpp"
#include "pmsm/simulation.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <numbers>

using namespace pmsm;

namespace {

constexpr double kPi = std::numbers::pi;

bool bit_identical(const TrajectoryLog& a, const TrajectoryLog& b) {
    if (a.rows.size() != b.rows.size() || a.aborted != b.aborted) return false;
    auto same = [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; };
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        const auto &r = a.rows[k], &s = b.rows[k];
        const double x[] = {r.t, r.i.x, r.i.y, r.v.x, r.v.y, r.omega_hat, r.theta_hat, r.det_y1, r.det_y2, r.margin};
        const double y[] = {s.t, s.i.x, s.i.y, s.v.x, s.v.y, s.omega_hat, s.theta_hat, s.det_y1, s.det_y2, s.margin};
        for (std::size_t j = 0; j < std::size(x); ++j)
            if (!same(x[j], y[j])) return false;
        if (r.rank != s.rank) return false;
    }
    return true;
}

// Steady currents under constant rotor-frame voltage at constant speed.
Dq settle(const MachineParams& p, double w, const Dq& v_dq, double dt, double t_end) {
    const SpeedProfile profile({{0.0, w}, {t_end + 1.0, w}});
    MachineState s;
    s.omega = w;
    const int n = static_cast<int>(std::lround(t_end / dt));
    for (int k = 0; k < n; ++k) {
        const double t = k * dt;
        // hold the voltage at the mid-step angle
        const AlphaBeta v = inverse_park(v_dq, s.theta + 0.5 * w * dt);
        s = integrate_electrical(s, v, profile, t, dt, p);
    }
    return park(s.current(), s.theta);
}

}  // namespace

TEST(SpeedProfile, InterpolationAndAcceleration) {
    const SpeedProfile sp({{0.0, 0.0}, {0.6, 0.0}, {0.8, 50.0}, {1.0, 50.0}});
    EXPECT_EQ(sp.omega(0.3), 0.0);
    EXPECT_DOUBLE_EQ(sp.omega(0.7), 25.0);
    EXPECT_EQ(sp.omega(2.0), 50.0);
    EXPECT_EQ(sp.acceleration(0.5), 0.0);
    EXPECT_DOUBLE_EQ(sp.acceleration(0.6), 250.0);
    EXPECT_DOUBLE_EQ(sp.acceleration(0.7), 250.0);
    EXPECT_EQ(sp.acceleration(0.8), 0.0);
    EXPECT_EQ(sp.angle(0.6), 0.0);
    EXPECT_DOUBLE_EQ(sp.angle(0.8), 5.0);
    EXPECT_DOUBLE_EQ(sp.angle(1.0), 15.0);
}

TEST(SpeedProfile, AngleMatchesCumulativeTrapezoid) {
    const SpeedProfile sp({{-0.1, 3.0}, {0.25, -7.0}, {0.3, 12.0}, {0.9, 40.0}, {1.5, 40.0}});
    const int n = 240000;  // dt = 5e-6 puts every breakpoint on the grid
    const double dt = 1.2 / n;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t0 = k * dt, t1 = (k + 1) * dt;
        acc += 0.5 * (sp.omega(t0) + sp.omega(t1)) * dt;
        if ((k + 1) % 24000 == 0) EXPECT_NEAR(sp.angle(t1), acc, 1e-9) << t1;
    }
}

TEST(SpeedProfile, Validation) {
    EXPECT_TRUE(SpeedProfile({{0.0, 0.0}, {1.0, 1.0}}).validate(1.0).empty());
    EXPECT_EQ(SpeedProfile({{0.0, 0.0}, {0.0, 1.0}, {2.0, 1.0}}).validate(1.0).size(), 1u);
    EXPECT_EQ(SpeedProfile({{0.1, 0.0}, {0.5, 1.0}}).validate(1.0).size(), 2u);
    EXPECT_FALSE(SpeedProfile().validate(1.0).empty());
}

TEST(Integrate, ZeroInputIsEquilibrium) {
    const SpeedProfile still({{0.0, 0.0}, {1.0, 0.0}});
    MachineState s;
    s.theta = 0.4;
    const MachineState n = integrate_electrical(s, {0.0, 0.0}, still, 0.0, 1e-3, reference_ipmsm());
    EXPECT_EQ(n.vector(), s.vector());
    EXPECT_THROW(integrate_electrical(s, {0.0, 0.0}, still, 0.0, 0.0, reference_ipmsm()), std::invalid_argument);
}

TEST(Integrate, SteadyStateMatchesAlgebraicSolution) {
    for (const MachineParams& p : {reference_ipmsm(), reference_spmsm()}) {
        const double w = 20.0;
        const Dq v{0.05, 0.6};
        // 20 electrical time constants of the slower axis
        const double tau = std::max(p.Ld(), p.Lq()) / p.R;
        // the held stator voltage lags the rotating reference by O(dt^2)
        const Dq i = settle(p, w, v, 1e-5, 20 * tau);
        const Eigen::Vector2d ref = oracle::steady_state_dq(v.vec(), w, {p.R, p.L0, p.L2, p.psi_r, 2.0, p.J});
        EXPECT_LT((i.vec() - ref).norm(), 1e-6 * (1 + ref.norm())) << i.x << " " << i.y;
    }
}

TEST(Integrate, FourthOrderConvergence) {
    const MachineParams p = reference_ipmsm();
    const SpeedProfile sp({{0.0, 0.0}, {1.0, 400.0}});
    auto run = [&](int n) {
        MachineState s;
        s.i_alpha = 2.0;
        const double dt = 0.01 / n;
        for (int k = 0; k < n; ++k) s = integrate_electrical(s, {3.0, -1.0}, sp, k * dt, dt, p);
        return s.current();
    };
    const AlphaBeta ref = run(4096);
    const double e1 = (run(16) - ref).norm();
    const double e2 = (run(32) - ref).norm();
    EXPECT_GT(e1 / e2, 12.0);
    EXPECT_LT(e1 / e2, 20.0);
}

TEST(Scenario, ReferenceDefaults) {
    const Scenario ip = reference_scenario(MachineKind::IPMSM);
    EXPECT_DOUBLE_EQ(ip.params.Ld(), 0.5e-3);
    EXPECT_DOUBLE_EQ(ip.params.Lq(), 0.8e-3);
    EXPECT_TRUE(ip.validate().empty());
    EXPECT_EQ(ip.setpoints.i_q, 15.0);
    EXPECT_EQ(ip.injection.t_start, 0.2);
    EXPECT_EQ(ip.injection.t_end, 0.5);
    EXPECT_EQ(ip.initial_theta_error, -kPi / 4);

    const Scenario sp = reference_scenario(MachineKind::SPMSM);
    EXPECT_EQ(sp.params.L2, 0.0);
    EXPECT_TRUE(sp.validate().empty());
}

TEST(Scenario, ValidationCollectsErrors) {
    Scenario s = reference_scenario(MachineKind::IPMSM);
    s.t_end = -1.0;
    s.ode_substeps = 0;
    s.params.R = 0.0;
    EXPECT_GE(s.validate().size(), 3u);
    EXPECT_THROW(run_scenario(s), std::invalid_argument);
}

TEST(RunScenario, SingleSample) {
    Scenario s = reference_scenario(MachineKind::SPMSM);
    s.t_end = s.Ts;
    const TrajectoryLog log = run_scenario(s);
    ASSERT_EQ(log.rows.size(), 1u);
    EXPECT_EQ(log.rows[0].t, 0.0);
    EXPECT_NEAR(log.rows[0].theta_err, -kPi / 4, 1e-15);
}

TEST(RunScenario, AbortIsFlaggedWithPartialLog) {
    Scenario s = reference_scenario(MachineKind::IPMSM);
    s.profile = SpeedProfile({{0.0, 0.0}, {1.0, 1e300}});
    s.t_end = 0.01;
    s.analysis = AnalysisSource::Off;
    const TrajectoryLog log = run_scenario(s);
    EXPECT_TRUE(log.aborted);
    EXPECT_FALSE(log.abort_reason.empty());
    EXPECT_LT(log.rows.size(), sample_count(s));
    // the row of the failing sample is logged before the plant step blows up
    ASSERT_FALSE(log.rows.empty());
    EXPECT_EQ(log.abort_time, log.rows.back().t);
}

TEST(RunScenario, SeededNoiseIsReproducible) {
    Scenario s = reference_scenario(MachineKind::IPMSM);
    s.t_end = 0.02;
    s.noise_std = 0.05;
    s.seed = 7;
    s.analysis = AnalysisSource::Off;
    const TrajectoryLog a = run_scenario(s);
    EXPECT_TRUE(bit_identical(a, run_scenario(s)));
    s.seed = 8;
    EXPECT_FALSE(bit_identical(a, run_scenario(s)));
}

TEST(RunScenario, WithoutEstimatorColumnsAreNaN) {
    Scenario s = reference_scenario(MachineKind::SPMSM);
    s.t_end = 0.001;
    const TrajectoryLog log = run_scenario(s, false);
    ASSERT_FALSE(log.rows.empty());
    EXPECT_TRUE(std::isnan(log.rows.back().theta_hat));
    EXPECT_EQ(log.rows.back().rank, 3);
    s.analysis = AnalysisSource::Estimate;
    EXPECT_THROW(run_scenario(s, false), std::invalid_argument);
}

class ReferenceRun : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        ipmsm_ = new TrajectoryLog(run_scenario(reference_scenario(MachineKind::IPMSM)));
        spmsm_ = new TrajectoryLog(run_scenario(reference_scenario(MachineKind::SPMSM)));
    }
    static void TearDownTestSuite() {
        delete ipmsm_;
        delete spmsm_;
    }
    static TrajectoryLog* ipmsm_;
    static TrajectoryLog* spmsm_;
};

TrajectoryLog* ReferenceRun::ipmsm_ = nullptr;
TrajectoryLog* ReferenceRun::spmsm_ = nullptr;

TEST_F(ReferenceRun, CompletesWithOneRowPerSample) {
    for (const TrajectoryLog* log : {ipmsm_, spmsm_}) {
        EXPECT_FALSE(log->aborted);
        ASSERT_EQ(log->rows.size(), 10000u);
        for (std::size_t k = 0; k < log->rows.size(); ++k) ASSERT_EQ(log->rows[k].t, k * 1e-4);
    }
}

TEST_F(ReferenceRun, LoggedRotorCurrentsArePark) {
    for (const TrajectoryLog* log : {ipmsm_, spmsm_})
        for (const auto& r : log->rows) {
            const Dq d = park(r.i, r.theta_true);
            ASSERT_LT((d - r.i_dq).norm(), 1e-12 * (1 + d.norm()));
        }
}

TEST_F(ReferenceRun, SpmsmStandstillWithoutInjection) {
    const InjectionSchedule inj = reference_injection();
    for (const auto& r : spmsm_->rows) {
        if (r.t >= 0.6 || inj.active(r.t)) continue;
        ASSERT_EQ(r.det_y1, 0.0) << r.t;
        ASSERT_EQ(r.rank, 3) << r.t;
    }
}

TEST_F(ReferenceRun, InjectionRestoresIpmsmButNotSpmsm) {
    const InjectionSchedule inj = reference_injection();
    double ip_sum = 0.0;
    int n = 0;
    for (const auto& r : ipmsm_->rows)
        if (inj.active(r.t)) {
            ip_sum += std::abs(r.det_y1);
            ++n;
        }
    EXPECT_GT(ip_sum / n, 1.0);
    for (const auto& r : spmsm_->rows)
        if (inj.active(r.t)) ASSERT_LT(r.rank, 4) << r.t;
}

TEST_F(ReferenceRun, SpmsmEstimateStaysOffUntilMotion) {
    for (const auto& r : spmsm_->rows) {
        if (r.t < 0.6) ASSERT_NEAR(r.theta_err, -kPi / 4, 0.01) << r.t;
        if (r.t >= 0.8) ASSERT_LT(std::abs(r.theta_err), 0.05) << r.t;
    }
}

TEST_F(ReferenceRun, EstimatorCovarianceStaysSymmetric) {
    for (const TrajectoryLog* log : {ipmsm_, spmsm_})
        for (const auto& r : log->rows) {
            ASSERT_LE(r.p_asymmetry, 1e-12);
            ASSERT_GE(r.p_min_diag, 0.0);
        }
}
