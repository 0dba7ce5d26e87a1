#include "pmsm/machine_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pmsm {

MachineParams MachineParams::from_dq(double R, double Ld, double Lq, double psi_r, int pole_pairs,
                                     double J) {
    MachineParams p;
    p.R = R;
    p.L0 = 0.5 * (Ld + Lq);
    p.L2 = 0.5 * (Ld - Lq);
    p.psi_r = psi_r;
    p.pole_pairs = pole_pairs;
    p.J = J;
    return p;
}

std::vector<std::string> MachineParams::validate() const {
    std::vector<std::string> errors;
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(finite(R) && R > 0.0)) errors.push_back("R > 0 violated (R=" + std::to_string(R) + ")");
    if (!(finite(L0) && L0 > 0.0)) errors.push_back("L0 > 0 violated (L0=" + std::to_string(L0) + ")");
    if (!finite(L2)) errors.push_back("L2 must be finite");
    if (!(finite(J) && J > 0.0)) errors.push_back("J > 0 violated (J=" + std::to_string(J) + ")");
    if (pole_pairs < 1) errors.push_back("pole_pairs >= 1 violated (p=" + std::to_string(pole_pairs) + ")");
    if (!(finite(psi_r) && psi_r >= 0.0))
        errors.push_back("psi_r >= 0 violated (psi_r=" + std::to_string(psi_r) + ")");
    if (finite(L0) && finite(L2) && !(std::abs(L2) < L0)) {
        std::ostringstream os;
        os << "|L2| < L0 violated (L2=" << L2 << ", L0=" << L0 << "): inductance matrix not positive definite";
        errors.push_back(os.str());
    }
    return errors;
}

void MachineParams::require_valid() const {
    const auto errors = validate();
    if (errors.empty()) return;
    std::string msg = "invalid machine parameters:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw std::invalid_argument(msg);
}

MachineParams reference_ipmsm() {
    return MachineParams::from_dq(0.01, 0.5e-3, 0.8e-3, 0.0225, 2, 1e-3);
}

MachineParams reference_spmsm() {
    MachineParams p = reference_ipmsm();
    p.L2 = 0.0;
    return p;
}

double wrap_angle(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(angle, two_pi);  // [-pi, pi]
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

double MachineState::theta_wrapped() const { return wrap_angle(theta); }

bool MachineState::finite() const {
    return std::isfinite(i_alpha) && std::isfinite(i_beta) && std::isfinite(omega) && std::isfinite(theta) &&
           std::isfinite(load_torque);
}

MachineState MachineState::from_vector(const Vec4& x, double load_torque) {
    return {x[0], x[1], x[2], x[3], load_torque};
}

Vec2 flux_direction(double theta) { return {std::cos(theta), std::sin(theta)}; }

Vec2 flux_direction_derivative(double theta) { return {-std::sin(theta), std::cos(theta)}; }

Mat2 inductance_matrix(double theta, const MachineParams& params) {
    const double c = std::cos(2.0 * theta);
    const double s = std::sin(2.0 * theta);
    Mat2 L;
    L << params.L0 + params.L2 * c, params.L2 * s,
         params.L2 * s, params.L0 - params.L2 * c;
    return L;
}

InductanceDerivatives inductance_matrix_derivs(double theta, const MachineParams& params) {
    const double c = std::cos(2.0 * theta);
    const double s = std::sin(2.0 * theta);
    const double k = 2.0 * params.L2;
    InductanceDerivatives d;
    d.first << -k * s, k * c,
                k * c, k * s;
    // L'' = -4 (L - L0 I)
    d.second << -2.0 * k * c, -2.0 * k * s,
                -2.0 * k * s, 2.0 * k * c;
    return d;
}

Dq park(const AlphaBeta& x, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * x.x + s * x.y, -s * x.x + c * x.y};
}

AlphaBeta inverse_park(const Dq& x, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * x.x - s * x.y, s * x.x + c * x.y};
}

AlphaBeta current_derivative_alphabeta(const AlphaBeta& i, double omega, double theta, const AlphaBeta& v,
                                       const MachineParams& params) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double c2 = c * c - s * s;
    const double s2 = 2.0 * s * c;
    const double L0 = params.L0;
    const double L2 = params.L2;
    // L' I
    const double lpi_a = 2.0 * L2 * (-s2 * i.x + c2 * i.y);
    const double lpi_b = 2.0 * L2 * (c2 * i.x + s2 * i.y);
    const double ra = v.x - params.R * i.x - omega * lpi_a + params.psi_r * omega * s;
    const double rb = v.y - params.R * i.y - omega * lpi_b - params.psi_r * omega * c;
    // det L = L0^2 - L2^2 for every theta
    const double inv_det = 1.0 / (L0 * L0 - L2 * L2);
    return {inv_det * ((L0 - L2 * c2) * ra - L2 * s2 * rb), inv_det * (-L2 * s2 * ra + (L0 + L2 * c2) * rb)};
}

double torque_alphabeta(const MachineState& s, const MachineParams& params) {
    const double ia = s.i_alpha;
    const double ib = s.i_beta;
    const double pm = params.psi_r * (ib * std::cos(s.theta) - ia * std::sin(s.theta));
    const double rel = params.L2 * ((ia * ia - ib * ib) * std::sin(2.0 * s.theta) -
                                    2.0 * ia * ib * std::cos(2.0 * s.theta));
    return 1.5 * params.pole_pairs * (pm - rel);
}

StateDerivative dynamics_alphabeta(const MachineState& state, const AlphaBeta& v, const MachineParams& params) {
    StateDerivative d;
    d.di = current_derivative_alphabeta(state.current(), state.omega, state.theta, v, params);
    d.domega = params.pole_pairs / params.J * (torque_alphabeta(state, params) - state.load_torque);
    d.dtheta = state.omega;
    return d;
}

double torque_dq(const Dq& i, const MachineParams& params) {
    return 1.5 * params.pole_pairs * (params.L_delta() * i.x + params.psi_r) * i.y;
}

DqDerivative dynamics_dq(const Dq& i, double omega, const Dq& v, double load_torque, const MachineParams& params) {
    // L_dq di/dt = v - (R + omega J2 L_dq) i - psi_r C'(0) omega, with C'(0) = [0, 1]
    const double Ld = params.Ld();
    const double Lq = params.Lq();
    DqDerivative d;
    d.di.x = (v.x - params.R * i.x + omega * Lq * i.y) / Ld;
    d.di.y = (v.y - params.R * i.y - omega * Ld * i.x - params.psi_r * omega) / Lq;
    d.domega = params.pole_pairs / params.J * (torque_dq(i, params) - load_torque);
    d.dtheta = omega;
    return d;
}

}  // namespace pmsm
