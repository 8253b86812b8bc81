#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "depo/types.hpp"

namespace depo {

/// Judge sampling contract: prompt budget 16K tokens, reply budget 1K.
struct GrmSampling {
    double temperature = 1.0;
    double top_p = 0.95;
    std::size_t max_reply_tokens = 1024;

    bool operator==(const GrmSampling&) const = default;
};

inline constexpr std::size_t kGrmPromptTokenBudget = 16384;

struct GrmRequest {
    std::string problem;
    std::string ground_truth;
    /// Concatenated token texts up to and including the think marker.
    std::string cot_text;
    GrmSampling sampling;
    /// Exact CoT token count when known; the prompt budget check falls back
    /// to a whitespace-word estimate otherwise.
    std::optional<std::size_t> cot_token_count;
};

struct GrmReplyRaw {
    std::string text;
};

struct TruncationError : std::runtime_error {
    std::size_t overflow_tokens;
    explicit TruncationError(std::size_t overflow)
        : std::runtime_error("prompt exceeds the 16K-token budget by " +
                             std::to_string(overflow) + " tokens"),
          overflow_tokens(overflow) {}
};

struct UnparseableReply : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Coarse token estimate used only for budget checks (whitespace words).
std::size_t approx_token_count(const std::string& text);

/// Request for one rollout: the CoT is the response text up to and including
/// the think marker (the whole response when no marker was emitted).
GrmRequest make_request(const std::string& problem, const std::string& ground_truth,
                        const RolloutRecord& record);

/// Deterministic prompt embedding problem, reference answer, and CoT
/// verbatim, instructing the judge to reply with labeled Score / Reflection /
/// Portion / Reason fields. Throws TruncationError when the prompt would
/// exceed the 16K-token budget.
std::string build_prompt(const GrmRequest& req);

struct ParsedVerdict {
    Verdict verdict;
    std::vector<std::string> warnings;
};

/// Parses a labeled-line reply. Labels are case-insensitive and recognized at
/// line starts; a field's value spans until the next label. A reply without a
/// parseable Score is an error, never a guess; a malformed Portion degrades
/// to an absent value with a warning.
ParsedVerdict parse_verdict(const GrmReplyRaw& raw);

/// Text-in/text-out completion endpoint. `key` identifies the originating
/// rollout so mock transports can serve canned replies.
class CompletionTransport {
  public:
    virtual ~CompletionTransport() = default;
    /// Returns the completion text; throws TransportError on failure.
    virtual std::string complete(const std::string& key, const std::string& prompt,
                                 const GrmSampling& sampling) = 0;
};

/// POSTs a single-prompt completion request to the endpoint named by the
/// GRM_URL / GRM_TOKEN environment variables.
class HttpCompletionTransport : public CompletionTransport {
  public:
    HttpCompletionTransport(std::string base_url, std::string auth_token = {});
    /// Reads GRM_URL and GRM_TOKEN; throws TransportError when GRM_URL is unset.
    static std::unique_ptr<HttpCompletionTransport> from_env();

    std::string complete(const std::string& key, const std::string& prompt,
                         const GrmSampling& sampling) override;

  private:
    std::string base_url_;
    std::string auth_token_;
};

/// Serves canned replies keyed by rollout_id from a JSON object file
/// {"<rollout_id>": "<reply text>", ...}. A missing key is a transport
/// failure.
class FileMockTransport : public CompletionTransport {
  public:
    explicit FileMockTransport(const std::string& path);
    explicit FileMockTransport(nlohmann::json replies);

    std::string complete(const std::string& key, const std::string& prompt,
                         const GrmSampling& sampling) override;

  private:
    nlohmann::json replies_;
};

/// One per-rollout scoring outcome. A missing verdict never masquerades as
/// "incorrect": failures carry an explicit error instead.
struct VerdictOutcome {
    std::optional<Verdict> verdict;
    std::vector<std::string> warnings;
    std::optional<std::string> error;

    bool ok() const { return verdict.has_value(); }
};

struct ScoreOptions {
    std::string problem;  ///< Problem statement shown to the judge.
    std::size_t max_in_flight = 4;
    std::size_t max_retries = 2;
    std::size_t backoff_ms = 100;  ///< Doubles per retry.
};

/// Scores every rollout of the group, one outcome per rollout in rollout
/// order regardless of completion order. Requests run concurrently up to
/// max_in_flight; each request retries with exponential backoff before
/// reporting VerdictUnavailable.
std::vector<VerdictOutcome> score_group(const RolloutGroup& group,
                                        CompletionTransport& transport,
                                        const ScoreOptions& options = {});

}  // namespace depo
