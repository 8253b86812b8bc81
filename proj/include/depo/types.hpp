#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace depo {

std::vector<std::string> default_transition_phrases();
std::vector<std::string> default_reflection_words();

/// Half-open token index range [begin, end).
struct TokenRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool empty() const { return end <= begin; }
    std::size_t size() const { return empty() ? 0 : end - begin; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }

    bool operator==(const TokenRange&) const = default;
};

/// One sampled response. Token texts are post-detokenization strings whose
/// concatenation is the full response text; lexicon matches on the text map
/// back to token indices through cumulative character offsets.
struct RolloutRecord {
    std::string prompt_id;
    std::string rollout_id;
    std::vector<std::string> token_texts;
    std::optional<std::vector<double>> token_logprob_old;
    std::optional<std::vector<double>> token_logprob_new;
    /// Index of the token containing the final character of "</think>".
    std::optional<std::size_t> think_end_index;
    bool is_overlong = false;
    std::size_t length_tokens = 0;
    /// Unknown interchange keys, preserved verbatim across read/write.
    nlohmann::json extra = nlohmann::json::object();

    bool operator==(const RolloutRecord&) const = default;
};

/// G rollouts sampled for one prompt. Ground truth lives here: one prompt,
/// one answer, G rollouts.
struct RolloutGroup {
    std::string prompt_id;
    std::vector<RolloutRecord> rollouts;
    std::string ground_truth;
    nlohmann::json extra = nlohmann::json::object();

    bool operator==(const RolloutGroup&) const = default;
};

/// Parsed judge reply: Score / Reflection / Portion / Reason.
struct Verdict {
    bool is_correct = false;
    /// First CoT sentence that derives the correct answer. Absent when
    /// is_correct is false.
    std::optional<std::string> reflection;
    /// Estimated ratio of efficient reasoning length to CoT length, in [0, 1].
    std::optional<double> portion;
    std::optional<std::string> reason;

    bool operator==(const Verdict&) const = default;
};

enum class SegSource {
    reflection_match,
    portion_fallback,
    whole_efficient,
    no_think_marker,
};

const char* to_string(SegSource s);

/// Split of a response into efficient span, inefficient span, and post-think
/// summary span. Ranges are half-open and, when the think marker is present,
/// partition [0, length_tokens) in order.
struct Segmentation {
    /// Last token of the efficient segment (y_ans). Present whenever the
    /// efficient range is non-empty.
    std::optional<std::size_t> ans_index;
    TokenRange efficient;
    TokenRange inefficient;
    TokenRange summary;
    SegSource source = SegSource::whole_efficient;

    bool operator==(const Segmentation&) const = default;
};

enum class RolloutStatus { correct, incorrect, overlong };

const char* to_string(RolloutStatus s);

/// Overlong dominates: a truncated response is a failure even if the text
/// contained the right answer.
RolloutStatus status_of(const RolloutRecord& record, const Verdict& verdict);

struct EngineConfig {
    /// Length-penalty strength.
    double alpha = 0.2;
    /// Decoupling strength; keeps the scaling factor within [1 - beta, 1].
    double beta = 0.5;
    /// PPO ratio clip range.
    double clip_epsilon = 0.2;
    /// Token budget; reaching it marks a rollout overlong.
    std::size_t max_response_length = 16384;
    std::size_t group_size = 8;
    /// Guard for divisions by group standard deviations.
    double std_floor = 1e-8;
    /// Fallback clip floor when no correct rollout has a positive advantage.
    double positive_floor = 1e-4;
    std::vector<std::string> transition_phrases = default_transition_phrases();
    std::vector<std::string> reflection_words = default_reflection_words();
    bool enable_adv_decouple = true;
    bool enable_length_penalty = true;

    bool operator==(const EngineConfig&) const = default;
};

/// Violation list for config invariants; empty means valid. Lexicons must be
/// non-empty, lowercase, deduplicated.
std::vector<std::string> validate_config(const EngineConfig& config);

/// Total function: returns one description per violated invariant, empty when
/// the group is well-formed. Deterministic and order-preserving; each entry
/// names the rollout and field.
std::vector<std::string> validate_group(const RolloutGroup& group,
                                        const EngineConfig& config);

}  // namespace depo
