#pragma once

#include "pmsm/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace pmsm {

enum class ExitCode : int { Ok = 0, Validation = 1, Numerical = 2, Io = 3 };

enum class Mode { Simulate, Analyze, Sweep };

struct CommandContext {
    std::ostream& out;
    std::ostream& err;
    std::optional<std::string> output_dir;  ///< overrides the config
    bool write_files = true;
    int jobs = 1;                           ///< sweep worker count
};

/// One summary row of a sweep.
struct SweepRow {
    double value = 0.0;
    double hfi_det = 0.0;  ///< NaN for a salient machine
    bool ran = false;
    bool aborted = false;
    double final_abs_theta_err = 0.0;
    double max_abs_theta_err_injection = 0.0;
    double mean_abs_theta_err_injection = 0.0;
    double rms_omega_err_motion = 0.0;
    double rank_deficient_fraction = 0.0;
};

/// Runs every point of the sweep, in grid order regardless of jobs.
std::vector<SweepRow> run_sweep(const RunConfig& config, int jobs = 1);

void write_sweep_csv(std::ostream& os, const std::string& parameter, const std::vector<SweepRow>& rows);

ExitCode run_command(const RunConfig& config, Mode mode, CommandContext& ctx);

}  // namespace pmsm
