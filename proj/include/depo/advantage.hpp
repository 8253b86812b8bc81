#pragma once

#include <vector>

#include "depo/types.hpp"

#include "depo/matcher.hpp"

namespace depo {

/// Group advantages at every stage of the shaping pipeline.
struct AdvantageTensor {
    /// Group-normalized rewards, one per rollout.
    std::vector<double> raw;
    /// After sign-repair clipping: positive for correct rollouts,
    /// non-positive for incorrect/overlong ones.
    std::vector<double> clipped;
    /// Token-level advantages: f(K) * clipped inside the inefficient span of
    /// a correct rollout, clipped elsewhere.
    std::vector<std::vector<double>> per_token;
    /// Scaling factor per rollout; 1 when not applicable.
    std::vector<double> f_values;

    bool operator==(const AdvantageTensor&) const = default;
};

/// Monotone decay of the inefficient-token weight with the redundancy count:
/// 1 - beta * (1 - e^(-beta * k)). Decreases from 1 at k = 0 toward 1 - beta.
double decouple_factor(double beta, int k);

/// (r_i - mean(r)) / std(r) with population std. Near-zero variance yields
/// all zeros rather than amplified noise.
std::vector<double> normalize(const std::vector<double>& rewards,
                              const EngineConfig& config);

/// Sign-repair clipping. Length shaping can push a correct rollout's
/// normalized advantage negative, and an overlong rollout's -1 reward can
/// drag incorrect rollouts positive; both mislead the policy update.
///
/// Correct rollouts are clipped to [min_pos, +inf) where min_pos is the
/// smallest strictly positive raw advantage among correct rollouts
/// (positive_floor when none exists); incorrect and overlong rollouts are
/// clipped to (-inf, 0].
std::vector<double> clip_advantages(const std::vector<double>& raw,
                                    const std::vector<RolloutStatus>& statuses,
                                    const EngineConfig& config);

/// Expands sequence advantages to per-token advantages, scaling the
/// inefficient span of each correct rollout by f(K). With decoupling disabled
/// the factor is identically 1.
AdvantageTensor decouple(const std::vector<double>& raw,
                         const std::vector<double>& clipped,
                         const std::vector<Segmentation>& segs,
                         const std::vector<RedundancyReport>& reports,
                         const std::vector<RolloutStatus>& statuses,
                         const EngineConfig& config);

}  // namespace depo
