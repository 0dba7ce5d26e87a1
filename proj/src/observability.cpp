#include "pmsm/observability.hpp"

#include "pmsm/errors.hpp"
#include "pmsm/linalg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pmsm {

namespace {

Mat2 rotation_generator() {
    Mat2 j;
    j << 0.0, -1.0,
         1.0, 0.0;
    return j;
}

void require_non_salient(const MachineParams& params, const char* what) {
    if (params.L2 != 0.0)
        throw std::invalid_argument(std::string(what) + " applies to non-salient machines only (L2 must be 0)");
}

bool is_angle_state(ModelKind kind, int index) { return kind == ModelKind::Electromechanical && index == 3; }

double fd_step(const ObservedSystem& sys, const Vec4& x, int index, int order, const FiniteDifferenceOptions& opt) {
    if (is_angle_state(sys.kind, index)) return opt.angle_steps[order - 1];
    return opt.steps[order - 1] * std::max(1.0, std::abs(x[index]));
}

Vec2 lie_derivative(const ObservedSystem& sys, const Vec4& x, const Vec2& u, int order,
                    const FiniteDifferenceOptions& opt);

Mat24 lie_gradient(const ObservedSystem& sys, const Vec4& x, const Vec2& u, int order,
                   const FiniteDifferenceOptions& opt) {
    Mat24 g = Mat24::Zero();
    if (order == 0) {
        g.leftCols<2>().setIdentity();
        return g;
    }
    for (int j = 0; j < 4; ++j) {
        const double h = fd_step(sys, x, j, order, opt);
        auto at = [&](double k) {
            Vec4 xs = x;
            xs[j] += k * h;
            return lie_derivative(sys, xs, u, order, opt);
        };
        g.col(j) = (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
    }
    return g;
}

Vec2 lie_derivative(const ObservedSystem& sys, const Vec4& x, const Vec2& u, int order,
                    const FiniteDifferenceOptions& opt) {
    if (order == 0) return x.head<2>();
    return lie_gradient(sys, x, u, order - 1, opt) * vector_field(sys, x, u);
}

}  // namespace

Vec4 vector_field(const ObservedSystem& sys, const Vec4& x, const Vec2& u) {
    const MachineParams& p = sys.params;
    Vec4 f;
    switch (sys.kind) {
        case ModelKind::Electromechanical: {
            const AlphaBeta di = current_derivative_alphabeta({x[0], x[1]}, x[2], x[3], {u[0], u[1]}, p);
            f[0] = di.x;
            f[1] = di.y;
            switch (sys.mechanics) {
                case Mechanics::Newton:
                    f[2] = p.pole_pairs / p.J *
                           (torque_alphabeta(MachineState::from_vector(x), p) - sys.load_torque);
                    f[3] = x[2];
                    break;
                case Mechanics::ImposedAcceleration:
                    f[2] = sys.acceleration;
                    f[3] = x[2];
                    break;
                case Mechanics::Locked:
                    f[2] = 0.0;
                    f[3] = 0.0;
                    break;
            }
            break;
        }
        case ModelKind::BackEmf: {
            const Vec2 i = x.head<2>();
            const Vec2 e = x.tail<2>();
            f.head<2>() = (u - p.R * i - e) / p.L0;
            // de/dt = (omega_dot / omega I + omega J2) e is singular at zero speed
            f.tail<2>() = (sys.omega_dot / sys.omega) * e + sys.omega * (rotation_generator() * e);
            break;
        }
        case ModelKind::Flux: {
            const Vec2 i = x.head<2>();
            const Vec2 rot = sys.omega * (rotation_generator() * x.tail<2>());
            f.head<2>() = (u - p.R * i - rot) / p.L0;
            f.tail<2>() = rot;
            break;
        }
    }
    if (!f.allFinite()) {
        throw NumericalError(sys.kind == ModelKind::BackEmf && sys.omega == 0.0
                                 ? "back-EMF model is undefined at zero speed"
                                 : "non-finite dynamics at evaluation point");
    }
    return f;
}

Eigen::MatrixXd lie_gradient_stack(const ObservedSystem& sys, const Vec4& x, const Vec2& u, int orders,
                                   const FiniteDifferenceOptions& options) {
    if (orders < 0 || orders > 3) throw std::invalid_argument("lie_gradient_stack: orders must be in [0, 3]");
    Eigen::MatrixXd stack(2 * (orders + 1), 4);
    for (int k = 0; k <= orders; ++k) stack.block<2, 4>(2 * k, 0) = lie_gradient(sys, x, u, k, options);
    if (!stack.allFinite()) throw NumericalError("non-finite Lie derivative gradient");
    return stack;
}

double stack_minor_det(const Eigen::MatrixXd& stack, int order) {
    if (order < 1 || 2 * order + 2 > stack.rows())
        throw std::invalid_argument("stack_minor_det: order outside the stack");
    Mat4 m;
    m.topRows<2>() = stack.topRows<2>();
    m.bottomRows<2>() = stack.block<2, 4>(2 * order, 0);
    return m.determinant();
}

Mat24 current_derivative_jacobian(const Vec4& x, const Vec2& u, const MachineParams& p) {
    const double omega = x[2];
    const double theta = x[3];
    const Vec2 I = x.head<2>();
    const Mat2 L = inductance_matrix(theta, p);
    const Mat2 Linv = L.inverse();
    const auto [Lp, Lpp] = inductance_matrix_derivs(theta, p);
    const Vec2 C = flux_direction(theta);
    const Vec2 Cp = flux_direction_derivative(theta);

    const Vec2 dIdt = Linv * (u - p.R * I - omega * (Lp * I) - p.psi_r * omega * Cp);
    const Mat2 Linv_p = -Linv * Lp * Linv;

    Mat24 jac;
    jac.leftCols<2>() = -Linv * (p.R * Mat2::Identity() + omega * Lp);
    jac.col(2) = -Linv * (Lp * I + p.psi_r * Cp);
    jac.col(3) = Linv_p * L * dIdt - omega * (Linv * (Lpp * I - p.psi_r * C));
    return jac;
}

Mat4 obs_matrix_y1_ipmsm(const Vec4& x, const Vec2& u, const MachineParams& params) {
    Mat4 o = Mat4::Zero();
    o.topLeftCorner<2, 2>().setIdentity();
    o.bottomRows<2>() = current_derivative_jacobian(x, u, params);
    return o;
}

double det_y1_ipmsm(const Dq& i, const Dq& di, double omega, const MachineParams& p) {
    const double Ld = p.Ld();
    const double Lq = p.Lq();
    const double Ldel = p.L_delta();
    const double active_flux = Ldel * i.x + p.psi_r;
    const double speed_term = (active_flux * active_flux + Ldel * Ldel * i.y * i.y) * omega / (Ld * Lq);
    const double rate_term = Ldel / (Ld * Lq) * (Ldel * di.x * i.y - active_flux * di.y);
    return speed_term + rate_term;
}

ObservabilityVector observability_vector(const Dq& i, const MachineParams& p) {
    ObservabilityVector v;
    v.d = p.L_delta() * i.x + p.psi_r;
    v.q = p.L_delta() * i.y;
    const double scale = std::abs(p.psi_r) + std::abs(p.L_delta()) * i.norm();
    if (std::hypot(v.d, v.q) > 1e-12 * scale) v.theta = std::atan2(v.q, v.d);
    return v;
}

double observability_margin(const Dq& i, const Dq& di, double omega, const MachineParams& p) {
    const ObservabilityVector v = observability_vector(i, p);
    if (v.degenerate()) throw std::domain_error("observability vector is zero; its phase rate is undefined");
    const double Ldel = p.L_delta();
    const double phase_rate = (v.d * Ldel * di.y - v.q * Ldel * di.x) / (v.d * v.d + v.q * v.q);
    return omega - phase_rate;
}

double spmsm_det_y1(double omega, const MachineParams& p) {
    require_non_salient(p, "spmsm_det_y1");
    const double k = p.psi_r / p.L0;
    return omega * k * k;
}

double spmsm_det_y2(double omega, double domega_dt, double i_d, const MachineParams& p) {
    require_non_salient(p, "spmsm_det_y2");
    const double pp = p.pole_pairs;
    const double rl = p.R / p.L0;
    const double k2 = p.psi_r * p.psi_r / (p.L0 * p.L0);
    return k2 * ((2.0 * omega * omega + rl * rl + 3.0 * pp * pp / p.J * p.psi_r * i_d) * omega - rl * domega_dt);
}

double spmsm_speed_second_derivative(double di_q_dt, const MachineParams& p) {
    require_non_salient(p, "spmsm_speed_second_derivative");
    const double pp = p.pole_pairs;
    return 1.5 * pp * pp / p.J * p.psi_r * di_q_dt;
}

double spmsm_det_y3_at_singularity(double i_d, double di_q_dt, const MachineParams& p) {
    require_non_salient(p, "spmsm_det_y3_at_singularity");
    const double pp = p.pole_pairs;
    const double rl = p.R / p.L0;
    const double k2 = p.psi_r * p.psi_r / (p.L0 * p.L0);
    const double bracket = rl * rl - 1.5 * pp * pp / p.J * (p.L0 * i_d + p.psi_r) * (p.psi_r / p.L0);
    return k2 * bracket * spmsm_speed_second_derivative(di_q_dt, p);
}

StandstillAnalysis spmsm_rank_at_standstill(const MachineParams& p, double theta) {
    require_non_salient(p, "spmsm_rank_at_standstill");
    const double r = -p.R / p.L0;
    const double a = p.psi_r / p.L0;
    StandstillAnalysis out;
    auto& m = out.matrix;
    m.setZero();
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    // each derivative order repeats the first-order block scaled by -R/L0
    double scale = 1.0;
    for (int k = 1; k <= 3; ++k) {
        m(2 * k, 0) = r * scale;
        m(2 * k, 2) = scale * a * std::sin(theta);
        m(2 * k + 1, 1) = r * scale;
        m(2 * k + 1, 2) = -scale * a * std::cos(theta);
        scale *= r;
    }
    out.rank = numeric_rank(Eigen::MatrixXd(m));
    return out;
}

double hfi_det_y1(double omega, double theta_err, double t, double V_hf, double omega_hf, const MachineParams& p) {
    require_non_salient(p, "hfi_det_y1");
    const double L0sq = p.L0 * p.L0;
    return -(p.psi_r * p.psi_r / L0sq) * omega + (p.psi_r / L0sq) * V_hf * std::cos(omega_hf * t) * std::sin(theta_err);
}

AugmentedRank augmented_output_rank(const MachineParams& p, double theta, double a, double b) {
    const StandstillAnalysis base = spmsm_rank_at_standstill(p, theta);
    // gradient of g(theta) = a theta + b; its Lie derivatives vanish at standstill
    constexpr double h = 1e-6;
    const double dg = ((a * (theta + h) + b) - (a * (theta - h) + b)) / (2.0 * h);
    Eigen::Matrix<double, 9, 4> m;
    m.topRows<8>() = base.matrix;
    m.row(8) << 0.0, 0.0, 0.0, dg;
    return {numeric_rank(Eigen::MatrixXd(m)), a == 0.0};
}

double emf_model_det(const MachineParams& p) {
    if (!(p.L0 > 0.0)) throw std::invalid_argument("emf_model_det: L0 must be positive");
    return 1.0 / (p.L0 * p.L0);
}

std::array<double, 3> flux_model_dets(double omega, const MachineParams& p) {
    if (!(p.L0 > 0.0)) throw std::invalid_argument("flux_model_dets: L0 must be positive");
    const double L = p.L0;
    const double R = p.R;
    const double w2 = omega * omega;
    const double L2 = L * L;
    return {w2 / L2,
            w2 / (L2 * L2) * (R * R + L2 * w2),
            w2 / (L2 * L2 * L2) * (R * R * R * R + L2 * L2 * w2 * w2 - R * R * L2 * w2)};
}

EmfReconstruction reconstruct_from_emf(double e_alpha, double e_beta, const MachineParams& p) {
    EmfReconstruction r;
    const double magnitude = std::hypot(e_alpha, e_beta);
    r.omega = magnitude / p.psi_r;
    if (magnitude > 0.0) r.theta = std::atan2(-e_alpha, e_beta);
    return r;
}

ObservabilityReport analyze_point(const MachineParams& params, double time, const MachineState& state,
                                  const AlphaBeta& voltage, double acceleration,
                                  const FiniteDifferenceOptions& options) {
    ObservabilityReport rep;
    rep.time = time;
    const Dq i = park(state.current(), state.theta);
    const Dq v = park(voltage, state.theta);
    const Dq di = dynamics_dq(i, state.omega, v, 0.0, params).di;
    rep.det_y1 = det_y1_ipmsm(i, di, state.omega, params);

    ObservedSystem sys;
    sys.params = params;
    sys.mechanics = Mechanics::ImposedAcceleration;
    sys.acceleration = acceleration;
    const Eigen::MatrixXd stack = lie_gradient_stack(sys, state.vector(), voltage.vec(), 3, options);
    rep.singular_values = singular_values(stack);
    rep.numeric_rank = numeric_rank(rep.singular_values);
    rep.det_y2 = stack_minor_det(stack, 2);
    rep.det_y3 = stack_minor_det(stack, 3);

    const ObservabilityVector ov = observability_vector(i, params);
    rep.psi_o_d = ov.d;
    rep.psi_o_q = ov.q;
    if (ov.degenerate()) {
        rep.theta_o = std::numeric_limits<double>::quiet_NaN();
        rep.margin = std::numeric_limits<double>::quiet_NaN();
    } else {
        rep.theta_o = *ov.theta;
        rep.margin = observability_margin(i, di, state.omega, params);
    }
    return rep;
}

}  // namespace pmsm
