#include "depo/rewards.hpp"

#include <cmath>
#include <stdexcept>

namespace depo {

double accuracy_reward(const RolloutRecord& record, const Verdict& verdict) {
    switch (status_of(record, verdict)) {
        case RolloutStatus::overlong: return -1.0;
        case RolloutStatus::correct: return 1.0;
        case RolloutStatus::incorrect: return 0.0;
    }
    return 0.0;
}

namespace {

struct GroupLengths {
    int delta = 0;
    LengthStats stats;
};

GroupLengths positive_lengths(const RolloutGroup& group,
                              const std::vector<Verdict>& verdicts) {
    GroupLengths gl;
    double sum = 0.0;
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        if (status_of(group.rollouts[i], verdicts[i]) == RolloutStatus::correct) {
            ++gl.delta;
            sum += static_cast<double>(group.rollouts[i].length_tokens);
        }
    }
    if (gl.delta == 0) return gl;
    gl.stats.mean_pos = sum / gl.delta;
    double sq = 0.0;
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        if (status_of(group.rollouts[i], verdicts[i]) == RolloutStatus::correct) {
            const double d =
                static_cast<double>(group.rollouts[i].length_tokens) - gl.stats.mean_pos;
            sq += d * d;
        }
    }
    gl.stats.std_pos = std::sqrt(sq / gl.delta);
    return gl;
}

}  // namespace

std::vector<double> length_rewards(const RolloutGroup& group,
                                   const std::vector<Verdict>& verdicts,
                                   const EngineConfig& config) {
    if (verdicts.size() != group.rollouts.size())
        throw std::invalid_argument("verdicts not aligned with rollouts");
    std::vector<double> out(group.rollouts.size(), 0.0);
    if (!config.enable_length_penalty) return out;

    const GroupLengths gl = positive_lengths(group, verdicts);
    if (gl.delta < 2 || gl.stats.std_pos < config.std_floor) return out;

    const double coef = -config.alpha * (1.0 - std::exp(-config.alpha * gl.delta));
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        if (status_of(group.rollouts[i], verdicts[i]) != RolloutStatus::correct) continue;
        const double z =
            (static_cast<double>(group.rollouts[i].length_tokens) - gl.stats.mean_pos) /
            gl.stats.std_pos;
        out[i] = coef * z;
    }
    return out;
}

std::vector<RewardBreakdown> final_rewards(const RolloutGroup& group,
                                           const std::vector<Verdict>& verdicts,
                                           const EngineConfig& config) {
    const std::vector<double> lengths = length_rewards(group, verdicts, config);
    const GroupLengths gl = positive_lengths(group, verdicts);
    std::vector<RewardBreakdown> out(group.rollouts.size());
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        RewardBreakdown& b = out[i];
        b.accuracy = accuracy_reward(group.rollouts[i], verdicts[i]);
        b.length = lengths[i];
        b.total = b.accuracy + b.length;
        b.delta = gl.delta;
        b.length_stats = gl.stats;
    }
    return out;
}

}  // namespace depo
