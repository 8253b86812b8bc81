#pragma once

#include <stdexcept>
#include <vector>

#include "depo/advantage.hpp"
#include "depo/types.hpp"

namespace depo {

struct MissingPolicyTerms : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Clipped surrogate objective over a group, token-mean across all rollouts
/// and no KL term:
///
///   J = (1 / sum_i |o_i|) * sum_i sum_t min(rho * A, clip(rho, 1-eps, 1+eps) * A)
///
/// with rho = exp(logp_new - logp_old) per token and A the token-level
/// advantage. The objective is maximized; trainers minimizing a loss negate
/// it. Requires token_logprob_old and token_logprob_new on every rollout.
double surrogate(const RolloutGroup& group, const AdvantageTensor& adv,
                 const EngineConfig& config);

/// Exact derivative of `surrogate` with respect to each token's logp_new,
/// aligned with the group's rollouts. The gradient is rho * A / sum|o| where
/// the unclipped arm of the min is active and 0 where the clip binds; ties at
/// a clip boundary resolve to the unclipped arm.
std::vector<std::vector<double>> surrogate_grad(const RolloutGroup& group,
                                                const AdvantageTensor& adv,
                                                const EngineConfig& config);

}  // namespace depo
