#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "csisched/sim.hpp"

namespace csisched {

// Channel source: either inline joint statistics or the Rayleigh/MMSE
// Monte-Carlo generator. The generator seed is derived from the scenario
// seed so a config+seed pair pins the table.
struct ChannelInline {
    JointStatistics stats;
};
struct ChannelRayleigh {
    double rho = 50.0;
    double beta = 0.1;
    int64_t samples = 400000;
    std::vector<double> quantizer;
};
using ChannelSource = std::variant<ChannelInline, ChannelRayleigh>;

struct PolicyConfig {
    enum class Kind { psi, naive, learning };
    Kind kind = Kind::psi;
    std::optional<double> gamma;
};

// Parsed experiment configuration; validated before any run, unknown keys
// rejected.
struct ScenarioConfig {
    ChannelSource channel;
    int users = 0;
    std::optional<PolicyConfig> policy;
    std::optional<ArrivalSpec> arrivals;
    uint64_t horizon = 10000;
    int reps = 1;
    uint64_t seed = 1;
    int stride = 0;
    std::string out = ".";
    bool explore_serves = false;
};

ScenarioConfig parse_scenario_config(const std::string& json_text);
std::string serialize_scenario_config(const ScenarioConfig& cfg);

// FNV-1a hash of the canonical serialization, hex encoded.
std::string config_hash(const ScenarioConfig& cfg);

// Materializes the channel table (running the Rayleigh generator when
// needed) and assembles the simulator scenario. Inline statistics with a
// single user table are replicated across `users`.
JointStatistics resolve_channel(const ScenarioConfig& cfg);
Scenario build_scenario(const ScenarioConfig& cfg, const JointStatistics& stats);

double require_gamma(const ScenarioConfig& cfg);

}  // namespace csisched
