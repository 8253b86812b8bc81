#pragma once

#include <vector>

#include "depo/types.hpp"

namespace depo {

/// Group-level statistics over correct, non-overlong response lengths.
struct LengthStats {
    double mean_pos = 0.0;
    /// Population standard deviation; group sizes are small and the advantage
    /// normalization uses the same convention.
    double std_pos = 0.0;

    bool operator==(const LengthStats&) const = default;
};

struct RewardBreakdown {
    double accuracy = 0.0;  ///< -1 overlong, 0 incorrect, 1 correct.
    double length = 0.0;
    double total = 0.0;  ///< accuracy + length.
    /// Count of correct, non-overlong rollouts in the group; proxies how easy
    /// the prompt is.
    int delta = 0;
    LengthStats length_stats;

    bool operator==(const RewardBreakdown&) const = default;
};

/// Three-way accuracy reward. Overlong is checked first: a truncated response
/// is a more severe failure than an incorrect one, whatever the verdict says.
double accuracy_reward(const RolloutRecord& record, const Verdict& verdict);

/// Difficulty-aware length rewards, one per rollout.
///
/// For a correct, non-overlong rollout: -alpha * (1 - e^(-alpha * delta)) *
/// z_i, where z_i is the rollout length's z-score over the correct
/// non-overlong lengths. Everything else gets 0, as do all rollouts when the
/// penalty is disabled or the group is degenerate (delta < 2 or near-zero
/// length variance).
std::vector<double> length_rewards(const RolloutGroup& group,
                                   const std::vector<Verdict>& verdicts,
                                   const EngineConfig& config);

/// Componentwise accuracy + length with the group stats filled in.
std::vector<RewardBreakdown> final_rewards(const RolloutGroup& group,
                                           const std::vector<Verdict>& verdicts,
                                           const EngineConfig& config);

}  // namespace depo
