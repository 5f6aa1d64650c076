#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "csisched/commands.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::optional<uint64_t> seed;
    std::optional<int> reps;
    std::optional<int64_t> horizon;
    std::optional<double> gamma;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "scenario config JSON")->required();
    cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", opts.seed, "base seed (overrides config)");
    cmd->add_option("--reps", opts.reps, "replication count (overrides config)");
    cmd->add_option("--horizon", opts.horizon, "horizon in slots (overrides config)");
    cmd->add_option("--gamma", opts.gamma, "exploration fraction (overrides config)");
}

csisched::ScenarioConfig load_config(const CommonOpts& opts) {
    std::ifstream is(opts.config_path);
    if (!is) throw std::runtime_error("cannot read config file " + opts.config_path);
    std::ostringstream buf;
    buf << is.rdbuf();
    csisched::ScenarioConfig cfg = csisched::parse_scenario_config(buf.str());
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.reps) {
        if (*opts.reps < 1) throw std::invalid_argument("--reps must be at least 1");
        cfg.reps = *opts.reps;
    }
    if (opts.horizon) {
        if (*opts.horizon < 1) throw std::invalid_argument("--horizon must be at least 1");
        cfg.horizon = static_cast<uint64_t>(*opts.horizon);
    }
    if (opts.gamma) {
        if (!(*opts.gamma > 0.0 && *opts.gamma < 1.0))
            throw std::invalid_argument("--gamma must lie in (0, 1)");
        if (!cfg.policy) cfg.policy = csisched::PolicyConfig{};
        cfg.policy->gamma = *opts.gamma;
    }
    if (!opts.out_dir.empty()) cfg.out = opts.out_dir;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scheduling with rate adaptation under imperfect channel knowledge"};
    app.require_subcommand(1);

    CommonOpts region_opts, plan_opts, sim_opts, lil_opts;
    std::string expect_str;

    CLI::App* region = app.add_subcommand("region", "stability region boundaries and corners");
    add_common(region, region_opts);
    CLI::App* plan = app.add_subcommand("plan", "min-max exploration plan");
    add_common(plan, plan_opts);
    CLI::App* simulate = app.add_subcommand("simulate", "replicated queueing simulation");
    add_common(simulate, sim_opts);
    simulate->add_option("--expect", expect_str, "require a stability verdict: stable|unstable");
    CLI::App* lil = app.add_subcommand("lil", "law-of-iterated-logarithm diagnostic trace");
    add_common(lil, lil_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (region->parsed()) {
            auto cfg = load_config(region_opts);
            return csisched::cmd_region(cfg, cfg.out);
        }
        if (plan->parsed()) {
            auto cfg = load_config(plan_opts);
            return csisched::cmd_plan(cfg, cfg.out);
        }
        if (simulate->parsed()) {
            auto cfg = load_config(sim_opts);
            std::optional<csisched::Stability> expect;
            if (!expect_str.empty()) {
                if (expect_str == "stable") expect = csisched::Stability::stable;
                else if (expect_str == "unstable") expect = csisched::Stability::unstable;
                else throw std::invalid_argument("--expect must be stable or unstable");
            }
            return csisched::cmd_simulate(cfg, cfg.out, expect);
        }
        auto cfg = load_config(lil_opts);
        return csisched::cmd_lil(cfg, cfg.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
