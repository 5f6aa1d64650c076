#include "csisched/scenario.hpp"

#include <cstdio>

#include <set>
#include <stdexcept>

#include "json.hpp"

namespace csisched {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const char* where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument(std::string("unknown key '") + it.key() + "' in " + where);
}

ChannelSource parse_channel(const json& obj) {
    if (!obj.is_object() || !obj.contains("source"))
        throw std::invalid_argument("channel needs a 'source'");
    std::string source = obj.at("source").get<std::string>();
    if (source == "inline") {
        reject_unknown(obj, {"source", "stats"}, "channel");
        if (!obj.contains("stats"))
            throw std::invalid_argument("inline channel needs 'stats'");
        return ChannelInline{JointStatistics::from_json(obj.at("stats").dump())};
    }
    if (source == "rayleigh-mmse") {
        reject_unknown(obj, {"source", "rho", "beta", "samples", "quantizer"}, "channel");
        ChannelRayleigh r;
        if (obj.contains("rho")) r.rho = obj.at("rho").get<double>();
        if (obj.contains("beta")) r.beta = obj.at("beta").get<double>();
        if (obj.contains("samples")) r.samples = obj.at("samples").get<int64_t>();
        if (!obj.contains("quantizer"))
            throw std::invalid_argument("rayleigh-mmse channel needs a 'quantizer' rate list");
        r.quantizer = obj.at("quantizer").get<std::vector<double>>();
        RateSpace check(r.quantizer);  // validates ordering
        if (!(r.rho > 0.0)) throw std::invalid_argument("rho must be positive");
        if (!(r.beta > 0.0 && r.beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
        if (r.samples < 10000) throw std::invalid_argument("samples must be at least 10^4");
        return r;
    }
    throw std::invalid_argument("channel source must be 'inline' or 'rayleigh-mmse'");
}

PolicyConfig parse_policy(const json& obj) {
    reject_unknown(obj, {"kind", "gamma"}, "policy");
    if (!obj.contains("kind")) throw std::invalid_argument("policy needs a 'kind'");
    std::string kind = obj.at("kind").get<std::string>();
    PolicyConfig p;
    if (kind == "psi") p.kind = PolicyConfig::Kind::psi;
    else if (kind == "naive") p.kind = PolicyConfig::Kind::naive;
    else if (kind == "learning") p.kind = PolicyConfig::Kind::learning;
    else throw std::invalid_argument("policy kind must be psi, naive or learning");
    if (obj.contains("gamma")) {
        p.gamma = obj.at("gamma").get<double>();
        if (!(*p.gamma > 0.0 && *p.gamma < 1.0))
            throw std::invalid_argument("gamma must lie in (0, 1)");
    }
    if (p.kind == PolicyConfig::Kind::learning && !p.gamma)
        throw std::invalid_argument("learning policy needs 'gamma'");
    return p;
}

ArrivalSpec parse_arrivals(const json& obj) {
    reject_unknown(obj, {"kind", "lambda", "batch"}, "arrivals");
    ArrivalSpec a;
    if (!obj.contains("kind") || !obj.contains("lambda"))
        throw std::invalid_argument("arrivals need 'kind' and 'lambda'");
    std::string kind = obj.at("kind").get<std::string>();
    if (kind == "bernoulli-batch") a.kind = ArrivalSpec::Kind::bernoulli_batch;
    else if (kind == "poisson") a.kind = ArrivalSpec::Kind::poisson;
    else throw std::invalid_argument("arrival kind must be bernoulli-batch or poisson");
    a.lambda = obj.at("lambda").get<std::vector<double>>();
    for (double v : a.lambda)
        if (!(v >= 0.0)) throw std::invalid_argument("arrival rates must be nonnegative");
    if (obj.contains("batch")) {
        a.batch = obj.at("batch").get<int>();
        if (a.batch < 0) throw std::invalid_argument("batch must be nonnegative");
    }
    return a;
}

}  // namespace

ScenarioConfig parse_scenario_config(const std::string& json_text) {
    json doc = json::parse(json_text);
    if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
    reject_unknown(doc,
                   {"channel", "users", "policy", "arrivals", "horizon", "reps", "seed", "stride",
                    "out", "explore_serves"},
                   "config");
    if (!doc.contains("channel")) throw std::invalid_argument("config needs 'channel'");

    ScenarioConfig cfg{parse_channel(doc.at("channel")), 0, {}, {}};
    if (doc.contains("users")) cfg.users = doc.at("users").get<int>();
    if (const auto* in = std::get_if<ChannelInline>(&cfg.channel)) {
        if (cfg.users == 0) cfg.users = in->stats.n_users();
        if (cfg.users != in->stats.n_users() && in->stats.n_users() != 1)
            throw std::invalid_argument("'users' conflicts with the inline statistics");
    } else if (cfg.users == 0) {
        throw std::invalid_argument("rayleigh-mmse channel needs 'users'");
    }
    if (cfg.users < 1) throw std::invalid_argument("'users' must be positive");

    if (doc.contains("policy")) cfg.policy = parse_policy(doc.at("policy"));
    if (doc.contains("arrivals")) {
        cfg.arrivals = parse_arrivals(doc.at("arrivals"));
        if (static_cast<int>(cfg.arrivals->lambda.size()) != cfg.users)
            throw std::invalid_argument("'lambda' must have one entry per user");
    }
    if (doc.contains("horizon")) {
        int64_t h = doc.at("horizon").get<int64_t>();
        if (h < 1) throw std::invalid_argument("horizon must be at least 1");
        cfg.horizon = static_cast<uint64_t>(h);
    }
    if (doc.contains("reps")) {
        cfg.reps = doc.at("reps").get<int>();
        if (cfg.reps < 1) throw std::invalid_argument("reps must be at least 1");
    }
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<uint64_t>();
    if (doc.contains("stride")) {
        cfg.stride = doc.at("stride").get<int>();
        if (cfg.stride < 0) throw std::invalid_argument("stride must be nonnegative");
    }
    if (doc.contains("out")) cfg.out = doc.at("out").get<std::string>();
    if (doc.contains("explore_serves")) cfg.explore_serves = doc.at("explore_serves").get<bool>();
    return cfg;
}

std::string serialize_scenario_config(const ScenarioConfig& cfg) {
    json doc;
    json ch;
    if (const auto* in = std::get_if<ChannelInline>(&cfg.channel)) {
        ch["source"] = "inline";
        ch["stats"] = json::parse(in->stats.to_json());
    } else {
        const auto& r = std::get<ChannelRayleigh>(cfg.channel);
        ch["source"] = "rayleigh-mmse";
        ch["rho"] = r.rho;
        ch["beta"] = r.beta;
        ch["samples"] = r.samples;
        ch["quantizer"] = r.quantizer;
    }
    doc["channel"] = std::move(ch);
    doc["users"] = cfg.users;
    if (cfg.policy) {
        json p;
        switch (cfg.policy->kind) {
            case PolicyConfig::Kind::psi: p["kind"] = "psi"; break;
            case PolicyConfig::Kind::naive: p["kind"] = "naive"; break;
            case PolicyConfig::Kind::learning: p["kind"] = "learning"; break;
        }
        if (cfg.policy->gamma) p["gamma"] = *cfg.policy->gamma;
        doc["policy"] = std::move(p);
    }
    if (cfg.arrivals) {
        json a;
        a["kind"] = cfg.arrivals->kind == ArrivalSpec::Kind::bernoulli_batch ? "bernoulli-batch"
                                                                             : "poisson";
        a["lambda"] = cfg.arrivals->lambda;
        if (cfg.arrivals->batch > 0) a["batch"] = cfg.arrivals->batch;
        doc["arrivals"] = std::move(a);
    }
    doc["horizon"] = cfg.horizon;
    doc["reps"] = cfg.reps;
    doc["seed"] = cfg.seed;
    if (cfg.stride > 0) doc["stride"] = cfg.stride;
    doc["out"] = cfg.out;
    if (cfg.explore_serves) doc["explore_serves"] = true;
    return doc.dump(2);
}

std::string config_hash(const ScenarioConfig& cfg) {
    // the output location does not identify the experiment
    ScenarioConfig keyed = cfg;
    keyed.out = "";
    std::string text = serialize_scenario_config(keyed);
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

JointStatistics resolve_channel(const ScenarioConfig& cfg) {
    if (const auto* in = std::get_if<ChannelInline>(&cfg.channel)) {
        if (in->stats.n_users() == cfg.users) return in->stats;
        // replicate a single shared table across users
        const auto& src = in->stats;
        const int s = src.n_states();
        std::vector<double> flat(static_cast<size_t>((s + 1) * s));
        for (int level = 0; level <= s; ++level)
            for (int e = 0; e < s; ++e)
                flat[static_cast<size_t>(level * s + e)] = src.prob(0, level, e);
        std::vector<std::vector<double>> users(static_cast<size_t>(cfg.users), flat);
        return JointStatistics::from_levels(src.rate_space(), std::move(users), 1e-9);
    }
    const auto& r = std::get<ChannelRayleigh>(cfg.channel);
    Rng rng(cfg.seed ^ 0xC3A5C85C97CB3127ull);
    return rayleigh_mmse_statistics(r.rho, r.beta, RateSpace(r.quantizer), cfg.users, r.samples,
                                    rng);
}

Scenario build_scenario(const ScenarioConfig& cfg, const JointStatistics& stats) {
    if (!cfg.policy) throw std::invalid_argument("this command needs a 'policy'");
    if (!cfg.arrivals) throw std::invalid_argument("this command needs 'arrivals'");
    Scenario sc{stats, PolicyPsi{}, *cfg.arrivals};
    switch (cfg.policy->kind) {
        case PolicyConfig::Kind::psi: sc.policy = PolicyPsi{}; break;
        case PolicyConfig::Kind::naive: sc.policy = PolicyNaive{}; break;
        case PolicyConfig::Kind::learning: sc.policy = PolicyLearning{*cfg.policy->gamma}; break;
    }
    sc.explore_serves = cfg.explore_serves;
    sc.stride = cfg.stride;
    return sc;
}

double require_gamma(const ScenarioConfig& cfg) {
    if (cfg.policy && cfg.policy->gamma) return *cfg.policy->gamma;
    throw std::invalid_argument("gamma is required (set policy.gamma or pass --gamma)");
}

}  // namespace csisched
