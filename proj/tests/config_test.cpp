#include "pmsm/config.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace pmsm;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string scenario_file(const char* name) { return std::string(PMSM_SOURCE_DIR) + "/scenarios/" + name; }

bool any_contains(const std::vector<std::string>& errors, const std::string& needle) {
    for (const auto& e : errors)
        if (e.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(ParseConfig, MinimalMachineGetsDefaults) {
    const ConfigResult r = parse_config(read_file(scenario_file("minimal.json")));
    ASSERT_TRUE(r.ok()) << (r.errors.empty() ? "" : r.errors.front());
    EXPECT_EQ(r.config->scenario, reference_scenario(MachineKind::IPMSM));
    EXPECT_EQ(r.config->bandwidth_hz, 500.0);
    EXPECT_FALSE(r.config->sweep.has_value());
}

TEST(ParseConfig, ShippedReferenceScenariosMatchDefaults) {
    const ConfigResult ip = parse_config(read_file(scenario_file("reference_ipmsm.json")));
    ASSERT_TRUE(ip.ok());
    EXPECT_EQ(ip.config->scenario, reference_scenario(MachineKind::IPMSM));
    const ConfigResult sp = parse_config(read_file(scenario_file("reference_spmsm.json")));
    ASSERT_TRUE(sp.ok());
    EXPECT_EQ(sp.config->scenario, reference_scenario(MachineKind::SPMSM));
}

TEST(ParseConfig, OtherShippedFilesParse) {
    for (const char* f : {"standstill_spmsm.json", "sweep_hfi_voltage.json"}) {
        const ConfigResult r = parse_config(read_file(scenario_file(f)));
        EXPECT_TRUE(r.ok()) << f << ": " << (r.errors.empty() ? "" : r.errors.front());
    }
}

TEST(ParseConfig, SaliencyInvariantNamed) {
    const ConfigResult r =
        parse_config(R"({"machine": {"R": 0.01, "L0": 1e-3, "L2": 1e-3, "psi_r": 0.02, "pole_pairs": 2}})");
    ASSERT_FALSE(r.ok());
    EXPECT_TRUE(any_contains(r.errors, "|L2| < L0"));
}

TEST(ParseConfig, ReportsEveryProblem) {
    const ConfigResult r = parse_config(R"({
        "machine": {"preset": "ipmsm", "R": -1, "colour": "red"},
        "scenario": {"Ts": "fast", "ode_substeps": 0},
        "injection": {"kind": "laser"},
        "estimator": {"Q": [1, 2, 3]},
        "extra": 1
    })");
    ASSERT_FALSE(r.ok());
    EXPECT_TRUE(any_contains(r.errors, "machine.colour: unknown key"));
    EXPECT_TRUE(any_contains(r.errors, "R > 0"));
    EXPECT_TRUE(any_contains(r.errors, "scenario.Ts: expected a number"));
    EXPECT_TRUE(any_contains(r.errors, "ode_substeps"));
    EXPECT_TRUE(any_contains(r.errors, "injection.kind"));
    EXPECT_TRUE(any_contains(r.errors, "estimator.Q: expected 4 entries"));
    EXPECT_TRUE(any_contains(r.errors, "config.extra: unknown key"));
    EXPECT_GE(r.errors.size(), 7u);
}

TEST(ParseConfig, SyntaxErrorHasLineAndColumn) {
    const ConfigResult r = parse_config("{\n  \"machine\": {\n    \"R\": 0.01,,\n  }\n}");
    ASSERT_FALSE(r.ok());
    ASSERT_EQ(r.errors.size(), 1u);
    EXPECT_NE(r.errors[0].find("line 3, column 15"), std::string::npos) << r.errors[0];
}

TEST(ParseConfig, MachineSectionRequired) {
    const ConfigResult r = parse_config("{}");
    ASSERT_FALSE(r.ok());
    EXPECT_TRUE(any_contains(r.errors, "machine: section is required"));
}

TEST(ParseConfig, InductanceParameterizations) {
    const ConfigResult both = parse_config(
        R"({"machine": {"R": 0.01, "Ld": 1e-3, "Lq": 2e-3, "L0": 1e-3, "psi_r": 0.02, "pole_pairs": 2}})");
    ASSERT_FALSE(both.ok());
    EXPECT_TRUE(any_contains(both.errors, "either Ld/Lq or L0/L2"));

    const ConfigResult dq =
        parse_config(R"({"machine": {"R": 0.01, "Ld": 1e-3, "Lq": 2e-3, "psi_r": 0.02, "pole_pairs": 2}})");
    ASSERT_TRUE(dq.ok());
    EXPECT_DOUBLE_EQ(dq.config->scenario.params.L0, 1.5e-3);
    EXPECT_DOUBLE_EQ(dq.config->scenario.params.L2, -0.5e-3);
    // gains follow the configured machine
    EXPECT_DOUBLE_EQ(dq.config->scenario.gains.kp_q, 2e-3 * 2 * 3.141592653589793 * 500);
}

TEST(ParseConfig, ExplicitGainsOverrideBandwidth) {
    const ConfigResult r =
        parse_config(R"({"machine": {"preset": "spmsm"}, "controller": {"kp_d": 1.5, "voltage_limit": 24}})");
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.config->scenario.gains.kp_d, 1.5);
    EXPECT_EQ(r.config->scenario.gains.voltage_limit, 24.0);
    EXPECT_DOUBLE_EQ(r.config->scenario.gains.kp_q, r.config->scenario.params.Lq() * 2 * 3.141592653589793 * 500);
}

TEST(ToJson, RoundTripsEveryField) {
    ConfigResult r = parse_config(R"({
        "machine": {"preset": "ipmsm", "J": 0.02},
        "scenario": {"seed": 42, "noise_std": 0.01, "analysis": "estimate",
                     "speed_profile": [[0, 1], [2, 3]], "t_end": 0.5},
        "injection": {"kind": "voltage_dhat", "amplitude": 3.0},
        "estimator": {"mechanics": "newton", "R": [0.5, 0.5]},
        "analyze": {"points": [{"omega": 2.0, "theta": 1.0}]},
        "sweep": {"parameter": "noise_std", "values": [0, 0.1], "probe": {"omega": 3}},
        "output": {"dir": "x"}
    })");
    ASSERT_TRUE(r.ok()) << r.errors.front();
    const std::string text = to_json(*r.config).dump();
    const ConfigResult again = parse_config(text);
    ASSERT_TRUE(again.ok()) << again.errors.front();
    EXPECT_EQ(*again.config, *r.config);
}

TEST(Sweep, ParameterApplication) {
    const Scenario base = reference_scenario(MachineKind::SPMSM);
    const Scenario s = apply_sweep_value(base, "hfi_voltage", 2.0);
    EXPECT_EQ(s.injection.kind, InjectionKind::VoltageOnDhat);
    EXPECT_EQ(s.injection.amplitude, 2.0);
    EXPECT_EQ(apply_sweep_value(base, "estimator.q_theta", 0.5).ekf.q_diag[3], 0.5);
    EXPECT_THROW(apply_sweep_value(base, "nope", 1.0), std::invalid_argument);
    for (const auto& name : sweep_parameters()) EXPECT_NO_THROW(apply_sweep_value(base, name, 0.1));

    const ConfigResult bad = parse_config(R"({"machine": {"preset": "spmsm"}, "sweep": {"parameter": "nope"}})");
    ASSERT_FALSE(bad.ok());
    EXPECT_TRUE(any_contains(bad.errors, "unknown parameter"));
    EXPECT_TRUE(any_contains(bad.errors, "sweep.values: required"));
}
