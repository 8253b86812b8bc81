#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "depo/advantage.hpp"
#include "depo/types.hpp"

namespace depo::sim {

/// Toy vocabulary. STEP carries reasoning forward, ANS_a/ANS_b commit an
/// answer, WAIT re-verifies it, ALT switches to another path, EOT closes the
/// thinking span (it plays the role of the think marker).
enum class ToySymbol : int { step = 0, ans_a, ans_b, wait, alt, eot };

inline constexpr std::size_t kVocabSize = 6;
inline constexpr int kPreAnswer = 0;
inline constexpr int kPostAnswer = 1;

const char* symbol_text(ToySymbol s);
std::optional<ToySymbol> symbol_from_text(const std::string& text);

using PhaseLogits = std::array<std::array<double, kVocabSize>, 2>;

/// Tabular two-phase softmax policy: 2 x 6 logits. The sampling distribution
/// per phase is the softmax of that phase's row.
struct ToyPolicy {
    PhaseLogits logits{};

    std::array<double, kVocabSize> probs(int phase) const;
    std::array<double, kVocabSize> log_probs(int phase) const;
};

/// Starting point with mild overthinking: answers arrive quickly but the
/// post-answer phase keeps re-verifying before closing the thought.
ToyPolicy initial_policy();

struct ToyEpisodeSpec {
    char target = 'a';  // 'a' or 'b'
    std::size_t max_len = 64;
    std::uint64_t seed = 0;
};

/// Deterministic stream cipher over (key, draw index); identical keys give
/// identical draw sequences whatever else ran before.
std::uint64_t rng_key(std::initializer_list<std::uint64_t> parts);

class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : state_(key) {}
    /// Uniform draw in [0, 1).
    double next_unit();

  private:
    std::uint64_t state_;
};

/// Samples G episodes with per-episode counter-based generators keyed by
/// (spec.seed, episode index). The phase flips to post_answer after the first
/// ANS_* symbol; an episode ends at EOT (which becomes the think marker) or
/// at max_len, the latter marking it overlong. Logprobs are recorded from the
/// sampling distribution into both the old and new policy slots.
RolloutGroup rollout_toy(const ToyPolicy& policy, const ToyEpisodeSpec& spec,
                         std::size_t g);

/// Perfect oracle judge: Score says whether the first committed answer
/// matches the target, Reflection is that token's text, Portion its position
/// over the CoT length. corruption_rate garbles reflections (keyed by
/// corruption_key) so the portion fallback path gets exercised too.
std::vector<Verdict> verdict_toy(const RolloutGroup& group, double corruption_rate = 0.0,
                                 std::uint64_t corruption_key = 0);

/// Phase of every token, derived from the committed-answer position.
std::vector<int> phases_of(const RolloutRecord& record);

/// Recomputes token_logprob_new for every rollout under `policy`.
void refresh_new_logprobs(RolloutGroup& group, const ToyPolicy& policy);

enum class SimAlgorithm { depo, grpo, depo_wo_decouple, depo_wo_lenpen };

std::optional<SimAlgorithm> parse_algorithm(const std::string& name);
const char* to_string(SimAlgorithm a);

struct SimOptions {
    std::size_t steps = 200;
    std::uint64_t seed = 0;
    std::size_t groups_per_step = 4;
    double learning_rate = 0.1;
    double corruption_rate = 0.0;
    char target = 'a';
    std::size_t max_len = 64;
    EngineConfig engine;

    SimOptions();
};

/// Engine configuration for the toy task: the matcher lexicons map ALT to a
/// transition phrase and WAIT to a reflection word, so the real matcher runs
/// unmodified on symbol text.
EngineConfig toy_engine_config();

struct StepMetrics {
    std::size_t step = 0;
    double accuracy = 0.0;
    double mean_length = 0.0;
    double mean_k = 0.0;
    double overlong_rate = 0.0;
    double mean_reward = 0.0;
};

struct SimDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimResult {
    std::vector<StepMetrics> series;
    ToyPolicy final_policy;
};

/// Group advantages under one arm: full shaping for depo, plain normalized
/// accuracy advantages for grpo, and the two single-toggle ablations.
AdvantageTensor arm_advantages(SimAlgorithm algo, const RolloutGroup& group,
                               const std::vector<Verdict>& verdicts,
                               const EngineConfig& engine,
                               std::vector<RolloutStatus>* statuses_out = nullptr,
                               std::vector<RewardBreakdown>* rewards_out = nullptr);

/// Mean surrogate over the batch with logp_new recomputed under `policy`.
double batch_surrogate(std::vector<RolloutGroup> batch,
                       const std::vector<AdvantageTensor>& tensors,
                       const ToyPolicy& policy, const EngineConfig& engine);

/// Gradient of batch_surrogate with respect to the policy logits, composed
/// through the softmax.
PhaseLogits policy_gradient(std::vector<RolloutGroup> batch,
                            const std::vector<AdvantageTensor>& tensors,
                            const ToyPolicy& policy, const EngineConfig& engine);

/// One snapshot-sample-update loop per step, ascending the surrogate with a
/// fixed step size. Row 0 carries the initial policy's sampled statistics;
/// row s the statistics of the batch that drove update s. Bit-identical
/// output for identical (algorithm, options) including the seed.
/// Throws SimDivergence when a parameter goes non-finite.
SimResult train(SimAlgorithm algo, const SimOptions& options);

std::string metrics_to_csv(const std::vector<StepMetrics>& series);

}  // namespace depo::sim
