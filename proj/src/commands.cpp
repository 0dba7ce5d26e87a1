#include "pmsm/commands.hpp"

#include "pmsm/csv.hpp"
#include "pmsm/errors.hpp"
#include "pmsm/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace pmsm {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path output_dir(const RunConfig& cfg, const CommandContext& ctx) {
    return ctx.output_dir ? fs::path(*ctx.output_dir) : fs::path(cfg.output.dir);
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    writer(os);
    os.flush();
    if (!os) throw IoError("write failed: " + path.string());
}

TrajectoryRow row_from_report(double t, const MachineState& state, const AlphaBeta& v, const ObservabilityReport& rep) {
    TrajectoryRow row;
    row.t = t;
    row.i = state.current();
    row.i_dq = park(state.current(), state.theta);
    row.i_ref = {kNaN, kNaN};
    row.v = v;
    row.omega_true = state.omega;
    row.theta_true = state.theta_wrapped();
    row.omega_hat = row.theta_hat = row.theta_err = kNaN;
    row.p_asymmetry = row.p_min_diag = kNaN;
    row.det_y1 = rep.det_y1;
    row.det_y2 = rep.det_y2;
    row.det_y3 = rep.det_y3;
    row.rank = rep.numeric_rank;
    row.psi_o_d = rep.psi_o_d;
    row.psi_o_q = rep.psi_o_q;
    row.theta_o = rep.theta_o;
    row.margin = rep.margin;
    return row;
}

ExitCode simulate(const RunConfig& cfg, CommandContext& ctx) {
    const TrajectoryLog log = run_scenario(cfg.scenario);
    const fs::path dir = output_dir(cfg, ctx);
    if (ctx.write_files) write_file(dir / cfg.output.csv, [&](std::ostream& os) { write_csv(os, log); });
    if (log.rows.empty()) {
        ctx.err << "numerical abort at t = " << format_double(log.abort_time) << ": " << log.abort_reason << '\n';
        return ExitCode::Numerical;
    }
    const std::string text = format_report(summarize(log, cfg.scenario.injection));
    if (ctx.write_files) write_file(dir / cfg.output.report, [&](std::ostream& os) { os << text; });
    ctx.out << text;
    if (log.aborted) {
        ctx.err << "numerical abort at t = " << format_double(log.abort_time) << ": " << log.abort_reason << '\n';
        return ExitCode::Numerical;
    }
    return ExitCode::Ok;
}

ExitCode analyze(const RunConfig& cfg, CommandContext& ctx) {
    TrajectoryLog log;
    if (!cfg.analyze_points.empty()) {
        for (const auto& p : cfg.analyze_points) {
            const ObservabilityReport rep =
                analyze_point(cfg.scenario.params, p.t, p.state, p.voltage, p.acceleration);
            log.rows.push_back(row_from_report(p.t, p.state, p.voltage, rep));
        }
    } else {
        Scenario s = cfg.scenario;
        if (s.analysis != AnalysisSource::TrueState) s.analysis = AnalysisSource::TrueState;
        log = run_scenario(s, false);
    }

    const fs::path dir = output_dir(cfg, ctx);
    if (ctx.write_files) write_file(dir / cfg.output.csv, [&](std::ostream& os) { write_csv(os, log); });

    if (!cfg.analyze_points.empty()) {
        ctx.out << "t,rank,det_y1,det_y2,det_y3,margin\n";
        for (const auto& r : log.rows)
            ctx.out << format_double(r.t) << ',' << r.rank << ',' << format_double(r.det_y1) << ','
                    << format_double(r.det_y2) << ',' << format_double(r.det_y3) << ',' << format_double(r.margin)
                    << '\n';
    } else if (!log.rows.empty()) {
        std::size_t deficient = 0;
        for (const auto& r : log.rows) deficient += r.rank < 4 ? 1 : 0;
        ctx.out << "samples: " << log.rows.size() << '\n'
                << "rank-deficient samples: " << deficient << '\n';
    }
    if (log.aborted) {
        ctx.err << "numerical abort at t = " << format_double(log.abort_time) << ": " << log.abort_reason << '\n';
        return ExitCode::Numerical;
    }
    return ExitCode::Ok;
}

SweepRow sweep_point(const Scenario& s, double value, const SweepSpec& spec) {
    SweepRow row;
    row.value = value;
    const double V = s.injection.kind == InjectionKind::VoltageOnDhat ? s.injection.amplitude : 0.0;
    row.hfi_det = s.params.salient()
                      ? kNaN
                      : hfi_det_y1(spec.probe.omega, spec.probe.theta_err, spec.probe.t, V, s.injection.frequency,
                                   s.params);
    if (!spec.run_scenarios) {
        row.final_abs_theta_err = row.max_abs_theta_err_injection = row.mean_abs_theta_err_injection = kNaN;
        row.rms_omega_err_motion = row.rank_deficient_fraction = kNaN;
        return row;
    }
    const TrajectoryLog log = run_scenario(s);
    row.ran = true;
    row.aborted = log.aborted;
    if (log.rows.empty()) {
        row.final_abs_theta_err = row.max_abs_theta_err_injection = row.mean_abs_theta_err_injection = kNaN;
        row.rms_omega_err_motion = row.rank_deficient_fraction = kNaN;
        return row;
    }
    const Report rep = summarize(log, s.injection);
    row.final_abs_theta_err = rep.final_abs_theta_err;
    const PhaseStats& inj = rep[Phase::Injection];
    row.max_abs_theta_err_injection = inj.samples ? inj.max_abs_theta_err : kNaN;
    row.mean_abs_theta_err_injection = inj.samples ? inj.mean_abs_theta_err : kNaN;
    const PhaseStats& mot = rep[Phase::Motion];
    row.rms_omega_err_motion = mot.samples ? mot.rms_omega_err : kNaN;
    std::size_t analyzed = 0, deficient = 0;
    for (const auto& r : log.rows) {
        if (r.rank < 0) continue;
        ++analyzed;
        deficient += r.rank < 4 ? 1 : 0;
    }
    row.rank_deficient_fraction = analyzed ? static_cast<double>(deficient) / static_cast<double>(analyzed) : kNaN;
    return row;
}

ExitCode sweep(const RunConfig& cfg, CommandContext& ctx) {
    if (!cfg.sweep) {
        ctx.err << "sweep: the configuration has no sweep section\n";
        return ExitCode::Validation;
    }
    // Validate every grid point before running any of them.
    bool valid = true;
    for (double v : cfg.sweep->values) {
        const Scenario s = apply_sweep_value(cfg.scenario, cfg.sweep->parameter, v);
        for (const auto& e : s.validate()) {
            ctx.err << cfg.sweep->parameter << " = " << format_double(v) << ": " << e << '\n';
            valid = false;
        }
    }
    if (!valid) return ExitCode::Validation;

    const std::vector<SweepRow> rows = run_sweep(cfg, ctx.jobs);
    std::ostringstream table;
    write_sweep_csv(table, cfg.sweep->parameter, rows);
    if (ctx.write_files)
        write_file(output_dir(cfg, ctx) / cfg.output.sweep, [&](std::ostream& os) { os << table.str(); });
    ctx.out << table.str();
    for (const auto& r : rows)
        if (r.aborted) {
            ctx.err << "numerical abort at " << cfg.sweep->parameter << " = " << format_double(r.value) << '\n';
            return ExitCode::Numerical;
        }
    return ExitCode::Ok;
}

}  // namespace

std::vector<SweepRow> run_sweep(const RunConfig& cfg, int jobs) {
    if (!cfg.sweep) return {};
    const SweepSpec& spec = *cfg.sweep;
    const std::size_t n = spec.values.size();
    std::vector<SweepRow> rows(n);
    const std::size_t workers = static_cast<std::size_t>(std::max(1, jobs));
    // Fixed assignment of points to workers; results land at their grid index.
    std::vector<std::future<void>> tasks;
    for (std::size_t w = 0; w < workers; ++w) {
        tasks.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t k = w; k < n; k += workers)
                rows[k] = sweep_point(apply_sweep_value(cfg.scenario, spec.parameter, spec.values[k]),
                                      spec.values[k], spec);
        }));
    }
    for (auto& t : tasks) t.get();
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::string& parameter, const std::vector<SweepRow>& rows) {
    os << "# schema: pmsm-observability-sweep v1\n";
    os << parameter
       << ",hfi_det,ran,aborted,final_abs_theta_err,max_abs_theta_err_injection,mean_abs_theta_err_injection,"
          "rms_omega_err_motion,rank_deficient_fraction\n";
    for (const auto& r : rows)
        os << format_double(r.value) << ',' << format_double(r.hfi_det) << ',' << (r.ran ? 1 : 0) << ','
           << (r.aborted ? 1 : 0) << ',' << format_double(r.final_abs_theta_err) << ','
           << format_double(r.max_abs_theta_err_injection) << ',' << format_double(r.mean_abs_theta_err_injection)
           << ',' << format_double(r.rms_omega_err_motion) << ',' << format_double(r.rank_deficient_fraction) << '\n';
}

ExitCode run_command(const RunConfig& cfg, Mode mode, CommandContext& ctx) {
    try {
        switch (mode) {
            case Mode::Simulate: return simulate(cfg, ctx);
            case Mode::Analyze: return analyze(cfg, ctx);
            case Mode::Sweep: return sweep(cfg, ctx);
        }
    } catch (const IoError& e) {
        ctx.err << "I/O error: " << e.what() << '\n';
        return ExitCode::Io;
    } catch (const NumericalError& e) {
        ctx.err << "numerical error: " << e.what() << '\n';
        return ExitCode::Numerical;
    } catch (const std::invalid_argument& e) {
        ctx.err << "invalid input: " << e.what() << '\n';
        return ExitCode::Validation;
    }
    return ExitCode::Validation;
}

}  // namespace pmsm
