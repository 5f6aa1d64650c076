#include "csisched/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "csisched/region.hpp"

namespace csisched {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << content;
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

std::filesystem::path prepare_out(const std::string& out_dir) {
    std::filesystem::path p(out_dir.empty() ? "." : out_dir);
    std::filesystem::create_directories(p);
    return p;
}

std::string boundary_csv(const std::vector<std::array<double, 2>>& verts) {
    std::ostringstream os;
    os << "lambda1,lambda2\n";
    for (const auto& v : verts) os << fmt17(v[0]) << ',' << fmt17(v[1]) << '\n';
    return os.str();
}

double region_gamma(const ScenarioConfig& cfg) {
    if (cfg.policy && cfg.policy->gamma) return *cfg.policy->gamma;
    return 0.2;  // documented default for region scaling output
}

}  // namespace

int cmd_region(const ScenarioConfig& cfg, const std::string& out_dir) {
    JointStatistics stats = resolve_channel(cfg);
    SuccessTable st = derive_success_table(stats);
    double gamma = region_gamma(cfg);
    RegionTerms full = region_full(st, cfg.users);
    RegionTerms naive = region_naive(st, cfg.users);
    RegionTerms scaled = scale_region(full, gamma);

    nlohmann::json corners;
    corners["users"] = cfg.users;
    corners["gamma"] = gamma;
    auto corner_list = [&](const RegionTerms& r) {
        nlohmann::json a = nlohmann::json::array();
        for (int u = 0; u < r.n_users; ++u) a.push_back(r.corner(u));
        return a;
    };
    corners["full"] = corner_list(full);
    corners["naive"] = corner_list(naive);
    corners["scaled"] = corner_list(scaled);

    auto out = prepare_out(out_dir);
    if (cfg.users == 2) {
        write_file(out / "region_full.csv", boundary_csv(boundary_2d(full)));
        write_file(out / "region_naive.csv", boundary_csv(boundary_2d(naive)));
        write_file(out / "region_scaled.csv", boundary_csv(boundary_2d(scaled)));
    } else {
        corners["warning"] = "boundary CSVs are only emitted for two users";
    }
    write_file(out / "corners.json", corners.dump(2) + "\n");
    return 0;
}

int cmd_plan(const ScenarioConfig& cfg, const std::string& out_dir) {
    double gamma = require_gamma(cfg);
    JointStatistics stats = resolve_channel(cfg);
    std::vector<std::vector<double>> marginals;
    for (int u = 0; u < stats.n_users(); ++u) marginals.push_back(stats.marginals(u));
    ExplorationPlan plan = solve_exploration_plan(marginals, gamma);

    nlohmann::json report;
    report["gamma"] = gamma;
    nlohmann::json users = nlohmann::json::array();
    for (int u = 0; u < plan.n_users; ++u) {
        nlohmann::json entry;
        double bottleneck = 0.0;
        bool first = true;
        nlohmann::json eta = nlohmann::json::array();
        for (size_t e = 0; e < plan.x[static_cast<size_t>(u)].size(); ++e) {
            double n_eta = plan.eta(u, static_cast<int>(e));
            eta.push_back(n_eta);
            double px = n_eta * plan.n_users;  // P * x
            if (first || px < bottleneck) {
                bottleneck = px;
                first = false;
            }
        }
        entry["bottleneck"] = bottleneck;
        entry["oracle"] = bottleneck_oracle(marginals[static_cast<size_t>(u)], gamma);
        entry["eta"] = std::move(eta);
        users.push_back(std::move(entry));
    }
    report["users"] = std::move(users);

    auto out = prepare_out(out_dir);
    write_file(out / "plan.json", plan.to_json() + "\n");
    write_file(out / "bottleneck.json", report.dump(2) + "\n");
    return 0;
}

int cmd_simulate(const ScenarioConfig& cfg, const std::string& out_dir,
                 std::optional<Stability> expect) {
    JointStatistics stats = resolve_channel(cfg);
    Scenario scenario = build_scenario(cfg, stats);
    Metrics metrics = run_replications(scenario, cfg.horizon, cfg.reps, cfg.seed);
    Stability verdict = detect_stability(metrics);

    nlohmann::json meta;
    meta["version"] = kVersion;
    meta["config_hash"] = config_hash(cfg);
    meta["seed"] = cfg.seed;
    meta["reps"] = cfg.reps;
    meta["horizon"] = cfg.horizon;
    meta["scale"] = metrics.scale;
    meta["stride"] = metrics.stride;
    meta["stability"] = stability_name(verdict);

    auto out = prepare_out(out_dir);
    write_file(out / "metrics.csv", metrics_csv(metrics));
    write_file(out / "metadata.json", meta.dump(2) + "\n");

    if (expect && *expect != verdict) {
        std::cerr << "expected " << stability_name(*expect) << ", detected "
                  << stability_name(verdict) << "\n";
        return 1;
    }
    return 0;
}

int cmd_lil(const ScenarioConfig& cfg, const std::string& out_dir) {
    if (!std::holds_alternative<ChannelInline>(cfg.channel))
        throw std::invalid_argument(
            "lil needs an inline statistics source (the diagnostic requires the exact "
            "conditionals)");
    double gamma = require_gamma(cfg);
    JointStatistics stats = resolve_channel(cfg);
    SuccessTable truth = derive_success_table(stats);
    std::vector<std::vector<double>> marginals;
    for (int u = 0; u < stats.n_users(); ++u) marginals.push_back(stats.marginals(u));
    ExplorationPlan plan = solve_exploration_plan(marginals, gamma);

    Rng rng(cfg.seed);
    auto history = run_exploration_trace(stats, plan, cfg.horizon, 40, rng);
    auto rows = lil_diagnostic(history, truth, plan);

    std::ostringstream os;
    os << "t,user,estimate_rank,rate_rank,normalized_deviation,envelope\n";
    for (const auto& r : rows)
        os << r.t << ',' << r.user << ',' << r.est_idx + 1 << ',' << r.rate_idx + 1 << ','
           << fmt17(r.normalized) << ',' << fmt17(r.envelope) << '\n';

    auto out = prepare_out(out_dir);
    write_file(out / "lil.csv", os.str());
    return 0;
}

}  // namespace csisched
