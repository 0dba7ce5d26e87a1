#include "pmsm/csv.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace pmsm {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return {buf, res.ptr};
}

void write_csv_header(std::ostream& os) {
    os << kCsvSchemaLine << '\n';
    for (std::size_t k = 0; k < kCsvColumns.size(); ++k) os << (k ? "," : "") << kCsvColumns[k];
    os << '\n';
}

void write_csv_row(std::ostream& os, const TrajectoryRow& r) {
    const double values[] = {r.t,          r.i.x,        r.i.y,        r.i_dq.x,    r.i_dq.y,
                             r.v.x,        r.v.y,        r.omega_true, r.theta_true, r.omega_hat,
                             r.theta_hat,  r.theta_err,  r.det_y1,     r.det_y2,    r.det_y3};
    for (double v : values) os << format_double(v) << ',';
    os << r.rank << ',' << format_double(r.psi_o_d) << ',' << format_double(r.psi_o_q) << ','
       << format_double(r.theta_o) << ',' << format_double(r.margin) << '\n';
}

void write_csv(std::ostream& os, const TrajectoryLog& log) {
    write_csv_header(os);
    for (const auto& row : log.rows) write_csv_row(os, row);
}

}  // namespace pmsm
