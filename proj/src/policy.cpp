#include "csisched/policy.hpp"

#include <stdexcept>
#include <vector>

namespace csisched {

RateChoice rate_adapt(const SuccessTable& st, int user, int est_idx) {
    if (user < 0 || user >= st.n_users())
        throw std::domain_error("rate_adapt: user index out of range");
    if (est_idx < 0 || est_idx >= st.rates.size() || !st.defined(user, est_idx))
        throw std::domain_error("rate_adapt: estimate outside the table domain");
    RateChoice best;
    for (int r = 0; r < st.rates.size(); ++r) {
        double v = st.prob(user, est_idx, r) * st.rates.rate(r);
        if (best.rate_idx < 0 || v > best.value) {
            best.rate_idx = r;
            best.value = v;
        }
    }
    return best;
}

Decision schedule_max_weight(const RateSpace& rates, std::span<const int64_t> queues,
                             std::span<const RateChoice> choices) {
    int best_user = -1;
    double best_weight = 0.0;
    for (size_t i = 0; i < queues.size(); ++i) {
        if (queues[i] < 0) throw std::invalid_argument("queue lengths must be nonnegative");
        double w = static_cast<double>(queues[i]) * choices[i].value;
        if (w > best_weight) {
            best_weight = w;
            best_user = static_cast<int>(i);
        }
    }
    if (best_user < 0) return Decision::idle();
    Decision d;
    d.transmit = true;
    d.user = best_user;
    d.rate_idx = choices[static_cast<size_t>(best_user)].rate_idx;
    d.rate = rates.rate(d.rate_idx);
    d.weight = best_weight;
    return d;
}

Decision schedule_psi(const SuccessTable& st, std::span<const int64_t> queues,
                      std::span<const int> est_idx) {
    if (queues.size() != est_idx.size() || static_cast<int>(queues.size()) != st.n_users())
        throw std::invalid_argument("schedule_psi: mismatched input sizes");
    std::vector<RateChoice> choices(queues.size());
    for (size_t i = 0; i < queues.size(); ++i)
        choices[i] = rate_adapt(st, static_cast<int>(i), est_idx[i]);
    return schedule_max_weight(st.rates, queues, choices);
}

Decision schedule_naive(const RateSpace& rates, std::span<const int64_t> queues,
                        std::span<const int> est_idx) {
    if (queues.size() != est_idx.size())
        throw std::invalid_argument("schedule_naive: mismatched input sizes");
    std::vector<RateChoice> choices(queues.size());
    for (size_t i = 0; i < queues.size(); ++i) {
        int e = est_idx[i];
        if (e < 0 || e >= rates.size())
            throw std::domain_error("schedule_naive: estimate outside the rate space");
        choices[i] = RateChoice{e, rates.rate(e)};  // believes success is certain
    }
    return schedule_max_weight(rates, queues, choices);
}

}  // namespace csisched
