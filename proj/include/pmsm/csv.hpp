#pragma once

#include "pmsm/simulation.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>

namespace pmsm {

/// First line of every trajectory file.
inline constexpr std::string_view kCsvSchemaLine = "# schema: pmsm-observability-trajectory v1";

inline constexpr std::array<std::string_view, 20> kCsvColumns{
    "t",         "i_alpha",   "i_beta",    "i_d",    "i_q",    "v_alpha", "v_beta",
    "omega_true", "theta_true", "omega_hat", "theta_hat", "theta_err", "det_y1", "det_y2",
    "det_y3",    "rank",      "psi_o_d",   "psi_o_q", "theta_o", "margin",
};

/// Shortest decimal string that parses back to the same double; "nan", "inf", "-inf"
/// for non-finite values.
std::string format_double(double value);

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const TrajectoryRow& row);
void write_csv(std::ostream& os, const TrajectoryLog& log);

}  // namespace pmsm
