#include "depo/objective.hpp"

#include <algorithm>
#include <cmath>

namespace depo {

namespace {

std::size_t total_tokens(const RolloutGroup& group, const AdvantageTensor& adv) {
    if (adv.per_token.size() != group.rollouts.size())
        throw std::invalid_argument("advantage tensor not aligned with group");
    std::size_t total = 0;
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        const RolloutRecord& r = group.rollouts[i];
        if (!r.token_logprob_old || !r.token_logprob_new)
            throw MissingPolicyTerms("rollout " + r.rollout_id +
                                     " lacks token_logprob_old/new");
        if (r.token_logprob_old->size() != r.token_texts.size() ||
            r.token_logprob_new->size() != r.token_texts.size() ||
            adv.per_token[i].size() != r.token_texts.size())
            throw std::invalid_argument("rollout " + r.rollout_id +
                                        ": per-token arrays not aligned");
        total += r.token_texts.size();
    }
    if (total == 0) throw std::invalid_argument("group has no tokens");
    return total;
}

}  // namespace

double surrogate(const RolloutGroup& group, const AdvantageTensor& adv,
                 const EngineConfig& config) {
    const double denom = static_cast<double>(total_tokens(group, adv));
    const double lo = 1.0 - config.clip_epsilon;
    const double hi = 1.0 + config.clip_epsilon;
    double sum = 0.0;
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        const RolloutRecord& r = group.rollouts[i];
        for (std::size_t t = 0; t < r.token_texts.size(); ++t) {
            const double rho =
                std::exp((*r.token_logprob_new)[t] - (*r.token_logprob_old)[t]);
            const double a = adv.per_token[i][t];
            sum += std::min(rho * a, std::clamp(rho, lo, hi) * a);
        }
    }
    return sum / denom;
}

std::vector<std::vector<double>> surrogate_grad(const RolloutGroup& group,
                                                const AdvantageTensor& adv,
                                                const EngineConfig& config) {
    const double denom = static_cast<double>(total_tokens(group, adv));
    const double lo = 1.0 - config.clip_epsilon;
    const double hi = 1.0 + config.clip_epsilon;
    std::vector<std::vector<double>> grads(group.rollouts.size());
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        const RolloutRecord& r = group.rollouts[i];
        std::vector<double>& row = grads[i];
        row.resize(r.token_texts.size(), 0.0);
        for (std::size_t t = 0; t < r.token_texts.size(); ++t) {
            const double rho =
                std::exp((*r.token_logprob_new)[t] - (*r.token_logprob_old)[t]);
            const double a = adv.per_token[i][t];
            // d(rho * a)/d logp_new = rho * a; zero when the clipped arm wins.
            if (rho * a <= std::clamp(rho, lo, hi) * a) row[t] = rho * a / denom;
        }
    }
    return grads;
}

}  // namespace depo
