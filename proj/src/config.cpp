#include "pmsm/config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <stdexcept>

namespace pmsm {

using nlohmann::json;

namespace {

struct NamedKind {
    const char* name;
    int value;
};

constexpr std::array<NamedKind, 3> kInjectionNames{{
    {"none", static_cast<int>(InjectionKind::None)},
    {"current_q", static_cast<int>(InjectionKind::CurrentOnQ)},
    {"voltage_dhat", static_cast<int>(InjectionKind::VoltageOnDhat)},
}};

constexpr std::array<NamedKind, 3> kMechanicsNames{{
    {"random_walk", static_cast<int>(Mechanics::ImposedAcceleration)},
    {"newton", static_cast<int>(Mechanics::Newton)},
    {"locked", static_cast<int>(Mechanics::Locked)},
}};

constexpr std::array<NamedKind, 3> kAnalysisNames{{
    {"true_state", static_cast<int>(AnalysisSource::TrueState)},
    {"estimate", static_cast<int>(AnalysisSource::Estimate)},
    {"off", static_cast<int>(AnalysisSource::Off)},
}};

template <std::size_t N>
std::string name_of(const std::array<NamedKind, N>& table, int value) {
    for (const auto& e : table)
        if (e.value == value) return e.name;
    return "?";
}

// Collects problems while walking the document; never stops at the first one.
class Reader {
public:
    std::vector<std::string> errors;

    bool object(const json& doc, const std::string& path) {
        if (doc.is_object()) return true;
        errors.push_back(path + ": expected an object");
        return false;
    }

    void keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : obj.items())
            if (!ok.contains(k)) errors.push_back(path + "." + k + ": unknown key");
    }

    bool number(const json& obj, const std::string& path, const char* key, double& out) {
        if (!obj.contains(key)) return false;
        const json& v = obj.at(key);
        if (!v.is_number()) {
            errors.push_back(path + "." + key + ": expected a number");
            return false;
        }
        out = v.get<double>();
        return true;
    }

    bool integer(const json& obj, const std::string& path, const char* key, long long& out) {
        if (!obj.contains(key)) return false;
        const json& v = obj.at(key);
        if (!v.is_number_integer()) {
            errors.push_back(path + "." + key + ": expected an integer");
            return false;
        }
        out = v.get<long long>();
        return true;
    }

    bool boolean(const json& obj, const std::string& path, const char* key, bool& out) {
        if (!obj.contains(key)) return false;
        const json& v = obj.at(key);
        if (!v.is_boolean()) {
            errors.push_back(path + "." + key + ": expected true or false");
            return false;
        }
        out = v.get<bool>();
        return true;
    }

    bool string(const json& obj, const std::string& path, const char* key, std::string& out) {
        if (!obj.contains(key)) return false;
        const json& v = obj.at(key);
        if (!v.is_string()) {
            errors.push_back(path + "." + key + ": expected a string");
            return false;
        }
        out = v.get<std::string>();
        return true;
    }

    template <std::size_t N>
    bool named(const json& obj, const std::string& path, const char* key, const std::array<NamedKind, N>& table,
               int& out) {
        std::string s;
        if (!string(obj, path, key, s)) return false;
        for (const auto& e : table)
            if (s == e.name) {
                out = e.value;
                return true;
            }
        std::string msg = path + "." + key + ": unknown value \"" + s + "\" (expected one of";
        for (const auto& e : table) msg += std::string(" ") + e.name;
        errors.push_back(msg + ")");
        return false;
    }

    std::optional<std::vector<double>> numbers(const json& obj, const std::string& path, const char* key,
                                               std::optional<std::size_t> size = std::nullopt) {
        if (!obj.contains(key)) return std::nullopt;
        const json& v = obj.at(key);
        const std::string where = path + "." + key;
        if (!v.is_array()) {
            errors.push_back(where + ": expected an array of numbers");
            return std::nullopt;
        }
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) {
                errors.push_back(where + ": expected an array of numbers");
                return std::nullopt;
            }
            out.push_back(e.get<double>());
        }
        if (size && out.size() != *size) {
            errors.push_back(where + ": expected " + std::to_string(*size) + " entries, got " +
                             std::to_string(out.size()));
            return std::nullopt;
        }
        return out;
    }
};

std::string syntax_error(const std::string& text, const json::parse_error& e) {
    // e.byte is the 1-based index of the offending character.
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t k = 0; k < end; ++k) {
        if (text[k] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    std::string what = e.what();
    if (const auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    return "syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
}

void read_machine(Reader& r, const json& doc, MachineParams& p) {
    const std::string path = "machine";
    if (!doc.contains("machine")) {
        r.errors.emplace_back("machine: section is required");
        return;
    }
    const json& m = doc.at("machine");
    if (!r.object(m, path)) return;
    r.keys(m, path, {"preset", "R", "Ld", "Lq", "L0", "L2", "psi_r", "pole_pairs", "J"});

    std::string preset;
    const bool has_preset = r.string(m, path, "preset", preset);
    if (has_preset) {
        if (preset == "ipmsm") {
            p = reference_ipmsm();
        } else if (preset == "spmsm") {
            p = reference_spmsm();
        } else {
            r.errors.push_back("machine.preset: unknown value \"" + preset + "\" (expected ipmsm or spmsm)");
        }
    } else {
        p = MachineParams{};
        p.J = reference_ipmsm().J;
    }

    const bool dq = m.contains("Ld") || m.contains("Lq");
    const bool avg = m.contains("L0") || m.contains("L2");
    if (dq && avg) {
        r.errors.emplace_back("machine: give either Ld/Lq or L0/L2, not both");
    } else if (dq) {
        double Ld = p.Ld(), Lq = p.Lq();
        const bool a = r.number(m, path, "Ld", Ld);
        const bool b = r.number(m, path, "Lq", Lq);
        if (!has_preset && !(a && b)) r.errors.emplace_back("machine: Ld and Lq must be given together");
        const MachineParams d = MachineParams::from_dq(p.R, Ld, Lq, p.psi_r, p.pole_pairs, p.J);
        p.L0 = d.L0;
        p.L2 = d.L2;
    } else if (avg) {
        const bool a = r.number(m, path, "L0", p.L0);
        if (!has_preset && !a) r.errors.emplace_back("machine: L0 is required");
        r.number(m, path, "L2", p.L2);
    } else if (!has_preset) {
        r.errors.emplace_back("machine: inductances are required (Ld/Lq or L0/L2)");
    }

    if (!r.number(m, path, "R", p.R) && !has_preset) r.errors.emplace_back("machine.R: required");
    if (!r.number(m, path, "psi_r", p.psi_r) && !has_preset) r.errors.emplace_back("machine.psi_r: required");
    long long pp = p.pole_pairs;
    if (r.integer(m, path, "pole_pairs", pp)) {
        p.pole_pairs = static_cast<int>(std::clamp<long long>(pp, -1, 1 << 20));
    } else if (!has_preset) {
        r.errors.emplace_back("machine.pole_pairs: required");
    }
    r.number(m, path, "J", p.J);

    for (const auto& e : p.validate()) r.errors.push_back("machine: " + e);
}

void read_scenario(Reader& r, const json& doc, Scenario& s) {
    if (!doc.contains("scenario")) return;
    const std::string path = "scenario";
    const json& o = doc.at("scenario");
    if (!r.object(o, path)) return;
    r.keys(o, path,
           {"t_end", "Ts", "ode_substeps", "theta0", "initial_theta_error", "initial_omega_hat", "noise_std", "seed",
            "speed_profile", "analysis"});
    r.number(o, path, "t_end", s.t_end);
    r.number(o, path, "Ts", s.Ts);
    long long n = s.ode_substeps;
    if (r.integer(o, path, "ode_substeps", n)) s.ode_substeps = static_cast<int>(std::clamp<long long>(n, 0, 1 << 20));
    r.number(o, path, "theta0", s.theta0);
    r.number(o, path, "initial_theta_error", s.initial_theta_error);
    r.number(o, path, "initial_omega_hat", s.initial_omega_hat);
    r.number(o, path, "noise_std", s.noise_std);
    if (o.contains("seed")) {
        if (o.at("seed").is_number_unsigned())
            s.seed = o.at("seed").get<std::uint64_t>();
        else
            r.errors.emplace_back("scenario.seed: expected a non-negative integer");
    }
    int analysis = static_cast<int>(s.analysis);
    if (r.named(o, path, "analysis", kAnalysisNames, analysis)) s.analysis = static_cast<AnalysisSource>(analysis);

    if (o.contains("speed_profile")) {
        const json& sp = o.at("speed_profile");
        std::vector<std::pair<double, double>> pts;
        bool ok = sp.is_array();
        if (ok) {
            for (const auto& e : sp) {
                if (!(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())) {
                    ok = false;
                    break;
                }
                pts.emplace_back(e[0].get<double>(), e[1].get<double>());
            }
        }
        if (ok)
            s.profile = SpeedProfile(std::move(pts));
        else
            r.errors.emplace_back("scenario.speed_profile: expected an array of [time, omega] pairs");
    }
}

void read_setpoints(Reader& r, const json& doc, Setpoints& sp) {
    if (!doc.contains("setpoints")) return;
    const std::string path = "setpoints";
    const json& o = doc.at("setpoints");
    if (!r.object(o, path)) return;
    r.keys(o, path, {"i_d", "i_q", "ramp_time"});
    r.number(o, path, "i_d", sp.i_d);
    r.number(o, path, "i_q", sp.i_q);
    r.number(o, path, "ramp_time", sp.ramp_time);
}

void read_injection(Reader& r, const json& doc, InjectionSchedule& inj) {
    if (!doc.contains("injection")) return;
    const std::string path = "injection";
    const json& o = doc.at("injection");
    if (!r.object(o, path)) return;
    r.keys(o, path, {"kind", "amplitude", "frequency", "t_start", "t_end"});
    int kind = static_cast<int>(inj.kind);
    if (r.named(o, path, "kind", kInjectionNames, kind)) inj.kind = static_cast<InjectionKind>(kind);
    r.number(o, path, "amplitude", inj.amplitude);
    r.number(o, path, "frequency", inj.frequency);
    r.number(o, path, "t_start", inj.t_start);
    r.number(o, path, "t_end", inj.t_end);
}

void read_controller(Reader& r, const json& doc, RunConfig& cfg) {
    CurrentLoopGains explicit_gains{};
    std::array<bool, 4> given{};
    double limit = cfg.scenario.gains.voltage_limit;
    if (doc.contains("controller")) {
        const std::string path = "controller";
        const json& o = doc.at("controller");
        if (r.object(o, path)) {
            r.keys(o, path, {"bandwidth_hz", "voltage_limit", "kp_d", "ki_d", "kp_q", "ki_q"});
            if (r.number(o, path, "bandwidth_hz", cfg.bandwidth_hz) && !(cfg.bandwidth_hz > 0.0))
                r.errors.emplace_back("controller.bandwidth_hz: must be positive");
            r.number(o, path, "voltage_limit", limit);
            given[0] = r.number(o, path, "kp_d", explicit_gains.kp_d);
            given[1] = r.number(o, path, "ki_d", explicit_gains.ki_d);
            given[2] = r.number(o, path, "kp_q", explicit_gains.kp_q);
            given[3] = r.number(o, path, "ki_q", explicit_gains.ki_q);
        }
    }
    CurrentLoopGains g = default_current_gains(cfg.scenario.params, cfg.bandwidth_hz, limit);
    if (given[0]) g.kp_d = explicit_gains.kp_d;
    if (given[1]) g.ki_d = explicit_gains.ki_d;
    if (given[2]) g.kp_q = explicit_gains.kp_q;
    if (given[3]) g.ki_q = explicit_gains.ki_q;
    cfg.scenario.gains = g;
}

void read_estimator(Reader& r, const json& doc, Scenario& s) {
    if (!doc.contains("estimator")) return;
    const std::string path = "estimator";
    const json& o = doc.at("estimator");
    if (!r.object(o, path)) return;
    r.keys(o, path, {"mechanics", "Q", "R", "P0"});
    int mech = static_cast<int>(s.estimator_mechanics);
    if (r.named(o, path, "mechanics", kMechanicsNames, mech)) s.estimator_mechanics = static_cast<Mechanics>(mech);
    if (auto q = r.numbers(o, path, "Q", 4)) s.ekf.q_diag = Vec4((*q)[0], (*q)[1], (*q)[2], (*q)[3]);
    if (auto rr = r.numbers(o, path, "R", 2)) s.ekf.r_diag = Vec2((*rr)[0], (*rr)[1]);
    if (auto p = r.numbers(o, path, "P0", 4)) s.ekf.p0_diag = Vec4((*p)[0], (*p)[1], (*p)[2], (*p)[3]);
}

void read_analyze(Reader& r, const json& doc, std::vector<AnalysisPoint>& points) {
    if (!doc.contains("analyze")) return;
    const std::string path = "analyze";
    const json& o = doc.at("analyze");
    if (!r.object(o, path)) return;
    r.keys(o, path, {"points"});
    if (!o.contains("points")) return;
    const json& arr = o.at("points");
    if (!arr.is_array()) {
        r.errors.emplace_back("analyze.points: expected an array");
        return;
    }
    for (std::size_t k = 0; k < arr.size(); ++k) {
        const std::string p = "analyze.points[" + std::to_string(k) + "]";
        if (!r.object(arr[k], p)) continue;
        r.keys(arr[k], p, {"t", "i_alpha", "i_beta", "omega", "theta", "v_alpha", "v_beta", "acceleration"});
        AnalysisPoint a;
        r.number(arr[k], p, "t", a.t);
        r.number(arr[k], p, "i_alpha", a.state.i_alpha);
        r.number(arr[k], p, "i_beta", a.state.i_beta);
        r.number(arr[k], p, "omega", a.state.omega);
        r.number(arr[k], p, "theta", a.state.theta);
        r.number(arr[k], p, "v_alpha", a.voltage.x);
        r.number(arr[k], p, "v_beta", a.voltage.y);
        r.number(arr[k], p, "acceleration", a.acceleration);
        points.push_back(a);
    }
}

void read_sweep(Reader& r, const json& doc, std::optional<SweepSpec>& sweep) {
    if (!doc.contains("sweep")) return;
    const std::string path = "sweep";
    const json& o = doc.at("sweep");
    if (!r.object(o, path)) return;
    r.keys(o, path, {"parameter", "values", "probe", "run_scenarios"});
    SweepSpec s;
    if (!r.string(o, path, "parameter", s.parameter)) {
        if (!o.contains("parameter")) r.errors.emplace_back("sweep.parameter: required");
    } else {
        const auto& names = sweep_parameters();
        if (std::find(names.begin(), names.end(), s.parameter) == names.end()) {
            std::string msg = "sweep.parameter: unknown parameter \"" + s.parameter + "\" (expected one of";
            for (const auto& n : names) msg += " " + n;
            r.errors.push_back(msg + ")");
        }
    }
    if (auto v = r.numbers(o, path, "values")) {
        s.values = *v;
        if (s.values.empty()) r.errors.emplace_back("sweep.values: must not be empty");
    } else if (!o.contains("values")) {
        r.errors.emplace_back("sweep.values: required");
    }
    r.boolean(o, path, "run_scenarios", s.run_scenarios);
    if (o.contains("probe")) {
        const json& p = o.at("probe");
        if (r.object(p, "sweep.probe")) {
            r.keys(p, "sweep.probe", {"omega", "theta_err", "t"});
            r.number(p, "sweep.probe", "omega", s.probe.omega);
            r.number(p, "sweep.probe", "theta_err", s.probe.theta_err);
            r.number(p, "sweep.probe", "t", s.probe.t);
        }
    }
    sweep = s;
}

void read_output(Reader& r, const json& doc, OutputSpec& out) {
    if (!doc.contains("output")) return;
    const std::string path = "output";
    const json& o = doc.at("output");
    if (!r.object(o, path)) return;
    r.keys(o, path, {"dir", "csv", "report", "sweep"});
    r.string(o, path, "dir", out.dir);
    r.string(o, path, "csv", out.csv);
    r.string(o, path, "report", out.report);
    r.string(o, path, "sweep", out.sweep);
}

}  // namespace

ConfigResult parse_config(const std::string& text) {
    ConfigResult result;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        result.errors.push_back(syntax_error(text, e));
        return result;
    }

    Reader r;
    if (!r.object(doc, "config")) {
        result.errors = std::move(r.errors);
        return result;
    }
    r.keys(doc, "config",
           {"machine", "scenario", "setpoints", "injection", "controller", "estimator", "analyze", "sweep", "output"});

    RunConfig cfg;
    cfg.scenario = reference_scenario(MachineKind::IPMSM);
    read_machine(r, doc, cfg.scenario.params);
    read_scenario(r, doc, cfg.scenario);
    read_setpoints(r, doc, cfg.scenario.setpoints);
    read_injection(r, doc, cfg.scenario.injection);
    read_controller(r, doc, cfg);
    read_estimator(r, doc, cfg.scenario);
    read_analyze(r, doc, cfg.analyze_points);
    read_sweep(r, doc, cfg.sweep);
    read_output(r, doc, cfg.output);

    // Machine errors were already reported with their section prefix.
    const std::size_t machine_errors = cfg.scenario.params.validate().size();
    auto scenario_errors = cfg.scenario.validate();
    for (std::size_t k = machine_errors; k < scenario_errors.size(); ++k) r.errors.push_back(scenario_errors[k]);

    if (r.errors.empty())
        result.config = std::move(cfg);
    else
        result.errors = std::move(r.errors);
    return result;
}

json to_json(const RunConfig& cfg) {
    const Scenario& s = cfg.scenario;
    json profile = json::array();
    for (const auto& [t, w] : s.profile.breakpoints()) profile.push_back({t, w});

    json out;
    out["machine"] = {{"R", s.params.R},         {"L0", s.params.L0},
                      {"L2", s.params.L2},       {"psi_r", s.params.psi_r},
                      {"pole_pairs", s.params.pole_pairs}, {"J", s.params.J}};
    out["scenario"] = {{"t_end", s.t_end},
                       {"Ts", s.Ts},
                       {"ode_substeps", s.ode_substeps},
                       {"theta0", s.theta0},
                       {"initial_theta_error", s.initial_theta_error},
                       {"initial_omega_hat", s.initial_omega_hat},
                       {"noise_std", s.noise_std},
                       {"seed", s.seed},
                       {"speed_profile", profile},
                       {"analysis", name_of(kAnalysisNames, static_cast<int>(s.analysis))}};
    out["setpoints"] = {{"i_d", s.setpoints.i_d}, {"i_q", s.setpoints.i_q}, {"ramp_time", s.setpoints.ramp_time}};
    out["injection"] = {{"kind", name_of(kInjectionNames, static_cast<int>(s.injection.kind))},
                        {"amplitude", s.injection.amplitude},
                        {"frequency", s.injection.frequency},
                        {"t_start", s.injection.t_start},
                        {"t_end", s.injection.t_end}};
    out["controller"] = {{"bandwidth_hz", cfg.bandwidth_hz}, {"voltage_limit", s.gains.voltage_limit},
                         {"kp_d", s.gains.kp_d},             {"ki_d", s.gains.ki_d},
                         {"kp_q", s.gains.kp_q},             {"ki_q", s.gains.ki_q}};
    out["estimator"] = {{"mechanics", name_of(kMechanicsNames, static_cast<int>(s.estimator_mechanics))},
                        {"Q", {s.ekf.q_diag[0], s.ekf.q_diag[1], s.ekf.q_diag[2], s.ekf.q_diag[3]}},
                        {"R", {s.ekf.r_diag[0], s.ekf.r_diag[1]}},
                        {"P0", {s.ekf.p0_diag[0], s.ekf.p0_diag[1], s.ekf.p0_diag[2], s.ekf.p0_diag[3]}}};
    if (!cfg.analyze_points.empty()) {
        json pts = json::array();
        for (const auto& a : cfg.analyze_points)
            pts.push_back({{"t", a.t},
                           {"i_alpha", a.state.i_alpha},
                           {"i_beta", a.state.i_beta},
                           {"omega", a.state.omega},
                           {"theta", a.state.theta},
                           {"v_alpha", a.voltage.x},
                           {"v_beta", a.voltage.y},
                           {"acceleration", a.acceleration}});
        out["analyze"] = {{"points", pts}};
    }
    if (cfg.sweep) {
        out["sweep"] = {{"parameter", cfg.sweep->parameter},
                        {"values", cfg.sweep->values},
                        {"run_scenarios", cfg.sweep->run_scenarios},
                        {"probe",
                         {{"omega", cfg.sweep->probe.omega},
                          {"theta_err", cfg.sweep->probe.theta_err},
                          {"t", cfg.sweep->probe.t}}}};
    }
    out["output"] = {{"dir", cfg.output.dir},
                     {"csv", cfg.output.csv},
                     {"report", cfg.output.report},
                     {"sweep", cfg.output.sweep}};
    return out;
}

const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> names{
        "injection.amplitude", "injection.frequency", "hfi_voltage",   "initial_theta_error",
        "noise_std",           "setpoints.i_d",       "setpoints.i_q", "machine.L2",
        "machine.R",           "estimator.q_omega",   "estimator.q_theta",
    };
    return names;
}

Scenario apply_sweep_value(const Scenario& base, const std::string& parameter, double value) {
    Scenario s = base;
    if (parameter == "injection.amplitude") {
        s.injection.amplitude = value;
    } else if (parameter == "injection.frequency") {
        s.injection.frequency = value;
    } else if (parameter == "hfi_voltage") {
        // Voltage injected on the estimated d-axis; keeps the configured window and frequency.
        s.injection.kind = InjectionKind::VoltageOnDhat;
        s.injection.amplitude = value;
    } else if (parameter == "initial_theta_error") {
        s.initial_theta_error = value;
    } else if (parameter == "noise_std") {
        s.noise_std = value;
    } else if (parameter == "setpoints.i_d") {
        s.setpoints.i_d = value;
    } else if (parameter == "setpoints.i_q") {
        s.setpoints.i_q = value;
    } else if (parameter == "machine.L2") {
        s.params.L2 = value;
    } else if (parameter == "machine.R") {
        s.params.R = value;
    } else if (parameter == "estimator.q_omega") {
        s.ekf.q_diag[2] = value;
    } else if (parameter == "estimator.q_theta") {
        s.ekf.q_diag[3] = value;
    } else {
        throw std::invalid_argument("unknown sweep parameter: " + parameter);
    }
    return s;
}

}  // namespace pmsm
