#include "depo/types.hpp"

#include <cmath>
#include <string>

namespace depo {

const char* to_string(SegSource s) {
    switch (s) {
        case SegSource::reflection_match: return "reflection_match";
        case SegSource::portion_fallback: return "portion_fallback";
        case SegSource::whole_efficient: return "whole_efficient";
        case SegSource::no_think_marker: return "no_think_marker";
    }
    return "unknown";
}

const char* to_string(RolloutStatus s) {
    switch (s) {
        case RolloutStatus::correct: return "correct";
        case RolloutStatus::incorrect: return "incorrect";
        case RolloutStatus::overlong: return "overlong";
    }
    return "unknown";
}

RolloutStatus status_of(const RolloutRecord& record, const Verdict& verdict) {
    if (record.is_overlong) return RolloutStatus::overlong;
    return verdict.is_correct ? RolloutStatus::correct : RolloutStatus::incorrect;
}

namespace {

bool is_lowercase(const std::string& s) {
    for (unsigned char c : s) {
        if (std::isupper(c)) return false;
    }
    return true;
}

void check_lexicon(const char* name, const std::vector<std::string>& lex,
                   std::vector<std::string>& out) {
    if (lex.empty()) {
        out.push_back(std::string(name) + " is empty");
        return;
    }
    for (std::size_t i = 0; i < lex.size(); ++i) {
        if (lex[i].empty())
            out.push_back(std::string(name) + "[" + std::to_string(i) + "] is empty");
        else if (!is_lowercase(lex[i]))
            out.push_back(std::string(name) + "[" + std::to_string(i) + "] not lowercase: " + lex[i]);
        for (std::size_t j = i + 1; j < lex.size(); ++j) {
            if (lex[i] == lex[j]) {
                out.push_back(std::string(name) + " duplicate entry: " + lex[i]);
                break;
            }
        }
    }
}

void check_logprobs(const RolloutRecord& r, const char* field,
                    const std::optional<std::vector<double>>& lp, bool require_nonpositive,
                    std::vector<std::string>& out) {
    if (!lp) return;
    const std::string who = "rollout " + r.rollout_id + ": " + field;
    if (lp->size() != r.length_tokens) {
        out.push_back(who + " length " + std::to_string(lp->size()) +
                      " != length_tokens " + std::to_string(r.length_tokens));
    }
    for (double v : *lp) {
        if (!std::isfinite(v)) {
            out.push_back(who + " contains a non-finite value");
            break;
        }
        if (require_nonpositive && v > 0.0) {
            out.push_back(who + " contains a positive log-probability");
            break;
        }
    }
}

}  // namespace

std::vector<std::string> validate_config(const EngineConfig& c) {
    std::vector<std::string> out;
    if (!(c.alpha > 0)) out.push_back("alpha must be > 0");
    if (!(c.beta > 0 && c.beta <= 1)) out.push_back("beta must be in (0, 1]");
    if (!(c.clip_epsilon > 0)) out.push_back("clip_epsilon must be > 0");
    if (c.max_response_length < 1) out.push_back("max_response_length must be >= 1");
    if (c.group_size < 2) out.push_back("group_size must be >= 2");
    if (!(c.std_floor > 0)) out.push_back("std_floor must be > 0");
    if (!(c.positive_floor > 0)) out.push_back("positive_floor must be > 0");
    check_lexicon("transition_phrases", c.transition_phrases, out);
    check_lexicon("reflection_words", c.reflection_words, out);
    return out;
}

std::vector<std::string> validate_group(const RolloutGroup& group,
                                        const EngineConfig& config) {
    std::vector<std::string> out;
    if (group.rollouts.size() < 2) out.push_back("group_size < 2");
    for (const RolloutRecord& r : group.rollouts) {
        const std::string who = "rollout " + r.rollout_id + ": ";
        if (r.prompt_id != group.prompt_id)
            out.push_back(who + "prompt_id " + r.prompt_id + " != group prompt_id " +
                          group.prompt_id);
        if (r.length_tokens != r.token_texts.size())
            out.push_back(who + "length_tokens " + std::to_string(r.length_tokens) +
                          " != count(token_texts) " + std::to_string(r.token_texts.size()));
        if (r.token_texts.empty()) out.push_back(who + "length_tokens must be >= 1");
        check_logprobs(r, "token_logprob_old", r.token_logprob_old, true, out);
        check_logprobs(r, "token_logprob_new", r.token_logprob_new, false, out);
        if (r.think_end_index && *r.think_end_index >= r.length_tokens)
            out.push_back(who + "think_end_index " + std::to_string(*r.think_end_index) +
                          " out of range (length " + std::to_string(r.length_tokens) + ")");
        if (r.is_overlong && r.length_tokens < config.max_response_length)
            out.push_back(who + "is_overlong but length_tokens " +
                          std::to_string(r.length_tokens) + " < max_response_length " +
                          std::to_string(config.max_response_length));
    }
    return out;
}

}  // namespace depo
