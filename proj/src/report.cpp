#include "pmsm/report.hpp"

#include "pmsm/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pmsm {

Phase classify(const TrajectoryRow& row, const InjectionSchedule& injection) {
    if (injection.active(row.t)) return Phase::Injection;
    return row.omega_true != 0.0 ? Phase::Motion : Phase::Standstill;
}

const char* phase_name(Phase phase) {
    switch (phase) {
        case Phase::Standstill: return "standstill";
        case Phase::Injection: return "injection";
        case Phase::Motion: return "motion";
    }
    return "?";
}

Report summarize(const TrajectoryLog& log, const InjectionSchedule& injection) {
    if (log.rows.empty()) throw std::invalid_argument("summarize: empty trajectory log");

    struct Acc {
        std::size_t n = 0, analyzed = 0, deficient = 0;
        double sum_theta = 0.0, max_theta = 0.0, last_theta = 0.0;
        double sum_omega = 0.0, sum_omega_sq = 0.0;
        double min_margin = std::numeric_limits<double>::infinity();
        double t_first = 0.0, t_last = 0.0;
    };
    std::array<Acc, 3> acc{};

    for (const auto& row : log.rows) {
        Acc& a = acc[static_cast<std::size_t>(classify(row, injection))];
        if (a.n == 0) a.t_first = row.t;
        a.t_last = row.t;
        ++a.n;
        const double e_th = std::abs(row.theta_err);
        const double e_w = std::abs(row.omega_hat - row.omega_true);
        a.sum_theta += e_th;
        a.max_theta = std::max(a.max_theta, e_th);
        a.last_theta = e_th;
        a.sum_omega += e_w;
        a.sum_omega_sq += e_w * e_w;
        if (row.rank >= 0) {
            ++a.analyzed;
            if (row.rank < 4) ++a.deficient;
        }
        if (std::isfinite(row.margin)) a.min_margin = std::min(a.min_margin, std::abs(row.margin));
    }

    Report rep;
    rep.samples = log.rows.size();
    rep.final_abs_theta_err = std::abs(log.rows.back().theta_err);
    rep.aborted = log.aborted;
    rep.abort_time = log.abort_time;
    rep.abort_reason = log.abort_reason;
    for (std::size_t k = 0; k < 3; ++k) {
        const Acc& a = acc[k];
        PhaseStats& s = rep.phases[k];
        s.phase = static_cast<Phase>(k);
        s.samples = a.n;
        if (a.n == 0) continue;
        const double n = static_cast<double>(a.n);
        s.t_first = a.t_first;
        s.t_last = a.t_last;
        s.max_abs_theta_err = a.max_theta;
        s.mean_abs_theta_err = a.sum_theta / n;
        s.final_abs_theta_err = a.last_theta;
        s.mean_abs_omega_err = a.sum_omega / n;
        s.rms_omega_err = std::sqrt(a.sum_omega_sq / n);
        s.rank_deficient_fraction =
            a.analyzed ? static_cast<double>(a.deficient) / static_cast<double>(a.analyzed)
                       : std::numeric_limits<double>::quiet_NaN();
        s.min_abs_margin = std::isfinite(a.min_margin) ? a.min_margin : std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

std::string format_report(const Report& rep) {
    std::ostringstream os;
    os << "samples: " << rep.samples << '\n';
    if (rep.aborted) os << "ABORTED at t = " << format_double(rep.abort_time) << ": " << rep.abort_reason << '\n';
    os << "final |theta_err| [rad]: " << format_double(rep.final_abs_theta_err) << '\n';
    for (const auto& s : rep.phases) {
        os << '\n' << "[" << phase_name(s.phase) << "]\n";
        if (s.samples == 0) {
            os << "  no samples in this phase\n";
            continue;
        }
        os << "  samples: " << s.samples << " (t = " << format_double(s.t_first) << " .. " << format_double(s.t_last)
           << ")\n"
           << "  max |theta_err| [rad]: " << format_double(s.max_abs_theta_err) << '\n'
           << "  mean |theta_err| [rad]: " << format_double(s.mean_abs_theta_err) << '\n'
           << "  final |theta_err| [rad]: " << format_double(s.final_abs_theta_err) << '\n'
           << "  mean |omega_err| [rad/s]: " << format_double(s.mean_abs_omega_err) << '\n'
           << "  rms omega_err [rad/s]: " << format_double(s.rms_omega_err) << '\n'
           << "  rank-deficient fraction: " << format_double(s.rank_deficient_fraction) << '\n'
           << "  min |margin| [rad/s]: " << format_double(s.min_abs_margin) << '\n';
    }
    return os.str();
}

}  // namespace pmsm
