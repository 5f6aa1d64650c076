#pragma once

#include <optional>
#include <string>

#include "csisched/scenario.hpp"

namespace csisched {

inline constexpr const char* kVersion = "0.1.0";

// Experiment subcommands. Each validates its inputs before writing anything,
// writes plotting-ready CSV/JSON artifacts into `out_dir`, and returns a
// process exit code.
int cmd_region(const ScenarioConfig& cfg, const std::string& out_dir);
int cmd_plan(const ScenarioConfig& cfg, const std::string& out_dir);
int cmd_simulate(const ScenarioConfig& cfg, const std::string& out_dir,
                 std::optional<Stability> expect);
int cmd_lil(const ScenarioConfig& cfg, const std::string& out_dir);

}  // namespace csisched
