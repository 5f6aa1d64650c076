#include "csisched/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace csisched {

JointStatistics JointStatistics::from_tables(
    RateSpace rates, const std::vector<std::vector<std::vector<double>>>& tables, double tol) {
    const int s = rates.size();
    std::vector<std::vector<double>> users;
    users.reserve(tables.size());
    for (const auto& t : tables) {
        if (static_cast<int>(t.size()) != s)
            throw std::invalid_argument("joint table must have |S| rows");
        std::vector<double> flat(static_cast<size_t>((s + 1) * s), 0.0);
        for (int c = 0; c < s; ++c) {
            if (static_cast<int>(t[static_cast<size_t>(c)].size()) != s)
                throw std::invalid_argument("joint table must have |S| columns");
            for (int e = 0; e < s; ++e)
                flat[static_cast<size_t>((c + 1) * s + e)] = t[static_cast<size_t>(c)][static_cast<size_t>(e)];
        }
        users.push_back(std::move(flat));
    }
    JointStatistics js(std::move(rates), std::move(users));
    js.validate(tol);
    return js;
}

JointStatistics JointStatistics::from_levels(RateSpace rates,
                                             std::vector<std::vector<double>> level_tables,
                                             double tol) {
    const size_t expect = static_cast<size_t>((rates.size() + 1) * rates.size());
    for (const auto& t : level_tables)
        if (t.size() != expect)
            throw std::invalid_argument("level table must be (|S|+1) x |S|");
    JointStatistics js(std::move(rates), std::move(level_tables));
    js.validate(tol);
    return js;
}

double JointStatistics::marginal(int user, int est) const {
    const int s = rates_.size();
    double m = 0.0;
    for (int level = 0; level <= s; ++level) m += prob(user, level, est);
    return m;
}

std::vector<double> JointStatistics::marginals(int user) const {
    std::vector<double> m(static_cast<size_t>(rates_.size()));
    for (int e = 0; e < rates_.size(); ++e) m[static_cast<size_t>(e)] = marginal(user, e);
    return m;
}

void JointStatistics::validate(double tol) const {
    if (users_.empty()) throw std::invalid_argument("joint statistics needs at least one user");
    for (const auto& u : users_) {
        double sum = 0.0;
        for (double v : u) {
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("joint probabilities must lie in [0, 1]");
            sum += v;
        }
        if (sum == 0.0)
            throw std::invalid_argument("invalid statistics: user table sums to 0");
        if (std::fabs(sum - 1.0) > tol)
            throw std::invalid_argument("joint probabilities must sum to 1");
    }
}

std::string JointStatistics::to_json() const {
    nlohmann::json doc;
    doc["rates"] = rates_.rates();
    nlohmann::json users = nlohmann::json::array();
    const int s = rates_.size();
    for (int u = 0; u < n_users(); ++u) {
        nlohmann::json joint = nlohmann::json::array();
        for (int c = 0; c < s; ++c) {
            nlohmann::json row = nlohmann::json::array();
            for (int e = 0; e < s; ++e) row.push_back(prob(u, c + 1, e));
            joint.push_back(std::move(row));
        }
        nlohmann::json entry;
        entry["joint"] = std::move(joint);
        double sub = 0.0;
        for (int e = 0; e < s; ++e) sub += prob(u, 0, e);
        if (sub > 0.0) {
            nlohmann::json row = nlohmann::json::array();
            for (int e = 0; e < s; ++e) row.push_back(prob(u, 0, e));
            entry["sub_min"] = std::move(row);
        }
        users.push_back(std::move(entry));
    }
    doc["users"] = std::move(users);
    return doc.dump();
}

JointStatistics JointStatistics::from_json(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (!doc.contains("rates") || !doc.contains("users"))
        throw std::invalid_argument("channel statistics JSON needs 'rates' and 'users'");
    RateSpace rates(doc["rates"].get<std::vector<double>>());
    const int s = rates.size();
    std::vector<std::vector<double>> users;
    for (const auto& entry : doc["users"]) {
        if (!entry.contains("joint"))
            throw std::invalid_argument("user entry needs a 'joint' matrix");
        std::vector<double> flat(static_cast<size_t>((s + 1) * s), 0.0);
        const auto& joint = entry["joint"];
        if (static_cast<int>(joint.size()) != s)
            throw std::invalid_argument("'joint' must have |S| rows");
        for (int c = 0; c < s; ++c) {
            const auto& row = joint[static_cast<size_t>(c)];
            if (static_cast<int>(row.size()) != s)
                throw std::invalid_argument("'joint' must have |S| columns");
            for (int e = 0; e < s; ++e)
                flat[static_cast<size_t>((c + 1) * s + e)] = row[static_cast<size_t>(e)].get<double>();
        }
        if (entry.contains("sub_min")) {
            const auto& row = entry["sub_min"];
            if (static_cast<int>(row.size()) != s)
                throw std::invalid_argument("'sub_min' must have |S| entries");
            for (int e = 0; e < s; ++e)
                flat[static_cast<size_t>(e)] = row[static_cast<size_t>(e)].get<double>();
        }
        users.push_back(std::move(flat));
    }
    return from_levels(std::move(rates), std::move(users), 1e-9);
}

SuccessTable derive_success_table(const JointStatistics& js) {
    js.validate(1e-9);
    const int s = js.n_states();
    SuccessTable st{js.rate_space(), {}};
    st.users.reserve(static_cast<size_t>(js.n_users()));
    for (int u = 0; u < js.n_users(); ++u) {
        SuccessTable::User ut;
        ut.marginal.resize(static_cast<size_t>(s));
        ut.in_domain.resize(static_cast<size_t>(s));
        ut.p.assign(static_cast<size_t>(s * s), 0.0);
        for (int e = 0; e < s; ++e) {
            double m = js.marginal(u, e);
            ut.marginal[static_cast<size_t>(e)] = m;
            ut.in_domain[static_cast<size_t>(e)] = m > 0.0 ? 1 : 0;
            if (m <= 0.0) continue;
            // tail sums over actual levels >= rate index + 1
            double tail = 0.0;
            for (int r = s - 1; r >= 0; --r) {
                tail += js.prob(u, r + 1, e);
                ut.p[static_cast<size_t>(e * s + r)] = tail / m;
            }
        }
        st.users.push_back(std::move(ut));
    }
    return st;
}

double estimate_vector_probability(const SuccessTable& st, std::span<const int> est_idx) {
    if (static_cast<int>(est_idx.size()) != st.n_users())
        throw std::domain_error("estimate vector length does not match user count");
    double p = 1.0;
    for (int u = 0; u < st.n_users(); ++u) {
        int e = est_idx[static_cast<size_t>(u)];
        if (e < 0 || e >= st.rates.size())
            throw std::domain_error("estimate index outside the rate space");
        p *= st.marginal(u, e);
    }
    return p;
}

ChannelSampler::ChannelSampler(const JointStatistics& js)
    : n_users_(js.n_users()), n_states_(js.n_states()) {
    cdf_.reserve(static_cast<size_t>(n_users_));
    for (int u = 0; u < n_users_; ++u) {
        std::vector<double> c(static_cast<size_t>((n_states_ + 1) * n_states_));
        double acc = 0.0;
        for (int level = 0; level <= n_states_; ++level)
            for (int e = 0; e < n_states_; ++e) {
                acc += js.prob(u, level, e);
                c[static_cast<size_t>(level * n_states_ + e)] = acc;
            }
        // guard against rounding: force the last entry to 1
        c.back() = 1.0;
        cdf_.push_back(std::move(c));
    }
}

void ChannelSampler::draw(Rng& rng, ChannelDraw& out) const {
    out.actual_level.resize(static_cast<size_t>(n_users_));
    out.est_idx.resize(static_cast<size_t>(n_users_));
    for (int u = 0; u < n_users_; ++u) {
        const auto& c = cdf_[static_cast<size_t>(u)];
        double x = rng.uniform();
        auto it = std::upper_bound(c.begin(), c.end(), x);
        size_t idx = static_cast<size_t>(it - c.begin());
        if (idx >= c.size()) idx = c.size() - 1;
        out.actual_level[static_cast<size_t>(u)] = static_cast<int>(idx) / n_states_;
        out.est_idx[static_cast<size_t>(u)] = static_cast<int>(idx) % n_states_;
    }
}

ChannelDraw ChannelSampler::draw(Rng& rng) const {
    ChannelDraw d;
    draw(rng, d);
    return d;
}

ChannelDraw sample_slot(const JointStatistics& js, Rng& rng) {
    ChannelSampler sampler(js);
    return sampler.draw(rng);
}

JointStatistics rayleigh_mmse_statistics(double rho, double beta, const RateSpace& quantizer,
                                         int n_users, int64_t sample_count, Rng& rng) {
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
    if (sample_count < 10000) throw std::invalid_argument("sample_count must be at least 10^4");
    if (n_users < 1) throw std::invalid_argument("need at least one user");

    const int s = quantizer.size();
    std::vector<int64_t> counts(static_cast<size_t>((s + 1) * s), 0);
    const double sd_est = std::sqrt((1.0 - beta) / 2.0);  // per real component
    const double sd_err = std::sqrt(beta / 2.0);
    for (int64_t i = 0; i < sample_count; ++i) {
        double er = sd_est * rng.gaussian();
        double ei = sd_est * rng.gaussian();
        double wr = sd_err * rng.gaussian();
        double wi = sd_err * rng.gaussian();
        double hr = er + wr;
        double hi = ei + wi;
        double rate_true = std::log1p(rho * (hr * hr + hi * hi));
        double rate_est = std::log1p(rho * (er * er + ei * ei));
        int level = quantizer.quantize_down(rate_true) + 1;  // 0 when below minimum
        int est = quantizer.quantize_down(rate_est);
        if (est < 0) est = 0;  // estimates clamp up to the lowest level
        counts[static_cast<size_t>(level * s + est)]++;
    }
    std::vector<double> table(counts.size());
    for (size_t i = 0; i < counts.size(); ++i)
        table[i] = static_cast<double>(counts[i]) / static_cast<double>(sample_count);
    std::vector<std::vector<double>> users(static_cast<size_t>(n_users), table);
    return JointStatistics::from_levels(quantizer, std::move(users), 1e-9);
}

}  // namespace csisched
