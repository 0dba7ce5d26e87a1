#pragma once

#include "pmsm/simulation.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace pmsm {

/// A state to analyze in `analyze` mode instead of a generated trajectory.
struct AnalysisPoint {
    double t = 0.0;
    MachineState state;
    AlphaBeta voltage;
    double acceleration = 0.0;

    bool operator==(const AnalysisPoint&) const = default;
};

/// Evaluation point of the HFI determinant reported by `sweep`.
struct HfiProbe {
    double omega = 0.0;
    double theta_err = 0.0;
    double t = 0.0;

    bool operator==(const HfiProbe&) const = default;
};

struct SweepSpec {
    std::string parameter;  ///< e.g. "injection.amplitude"
    std::vector<double> values;
    HfiProbe probe;
    bool run_scenarios = true;  ///< false: only closed-form columns

    bool operator==(const SweepSpec&) const = default;
};

struct OutputSpec {
    std::string dir = ".";
    std::string csv = "trajectory.csv";
    std::string report = "report.txt";
    std::string sweep = "sweep.csv";

    bool operator==(const OutputSpec&) const = default;
};

struct RunConfig {
    Scenario scenario;
    double bandwidth_hz = 500.0;  ///< used when gains are not given explicitly
    std::vector<AnalysisPoint> analyze_points;
    std::optional<SweepSpec> sweep;
    OutputSpec output;

    bool operator==(const RunConfig&) const = default;
};

struct ConfigResult {
    std::optional<RunConfig> config;
    std::vector<std::string> errors;

    bool ok() const { return config.has_value(); }
};

/// Parses and validates a JSON configuration. Every problem found is reported;
/// syntax errors carry line and column.
ConfigResult parse_config(const std::string& text);

/// Complete configuration with every default spelled out.
nlohmann::json to_json(const RunConfig& config);

/// Sweep parameter names accepted by apply_sweep_value.
const std::vector<std::string>& sweep_parameters();

/// Returns the scenario with the named parameter set; throws std::invalid_argument
/// on an unknown name.
Scenario apply_sweep_value(const Scenario& base, const std::string& parameter, double value);

}  // namespace pmsm
