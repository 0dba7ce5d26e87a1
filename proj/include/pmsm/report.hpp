#pragma once

#include "pmsm/control.hpp"
#include "pmsm/simulation.hpp"

#include <array>
#include <string>

namespace pmsm {

enum class Phase { Standstill, Injection, Motion };

/// A sample belongs to Injection while the schedule is active, otherwise to
/// Motion when the true speed is nonzero, otherwise to Standstill.
Phase classify(const TrajectoryRow& row, const InjectionSchedule& injection);

const char* phase_name(Phase phase);

struct PhaseStats {
    Phase phase = Phase::Standstill;
    std::size_t samples = 0;
    double t_first = 0.0;
    double t_last = 0.0;
    double max_abs_theta_err = 0.0;
    double mean_abs_theta_err = 0.0;
    double final_abs_theta_err = 0.0;
    double mean_abs_omega_err = 0.0;
    double rms_omega_err = 0.0;
    double rank_deficient_fraction = 0.0;  ///< rank < 4 among analyzed samples
    double min_abs_margin = 0.0;           ///< NaN when no sample has a defined margin
};

struct Report {
    std::array<PhaseStats, 3> phases;  ///< indexed by Phase; samples == 0 marks an empty phase
    std::size_t samples = 0;
    double final_abs_theta_err = 0.0;
    bool aborted = false;
    double abort_time = 0.0;
    std::string abort_reason;

    const PhaseStats& operator[](Phase p) const { return phases[static_cast<std::size_t>(p)]; }
};

/// Throws std::invalid_argument on an empty log.
Report summarize(const TrajectoryLog& log, const InjectionSchedule& injection);

/// Plain-text rendering; empty phases are listed with a note.
std::string format_report(const Report& report);

}  // namespace pmsm
