#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "depo/types.hpp"

namespace depo {

enum class MatchKind { transition, reflection };

const char* to_string(MatchKind k);

/// One lexicon hit. The span is a half-open character range into the
/// concatenated response text and always lies inside the inefficient
/// segment's character extent.
struct LexiconMatch {
    std::string entry;
    std::size_t begin = 0;
    std::size_t end = 0;
    MatchKind kind = MatchKind::reflection;

    bool operator==(const LexiconMatch&) const = default;
};

/// Redundant-reasoning counts over the inefficient segment.
///   N — sentences whose head is a transition phrase (a path switch),
///   X — word-boundary occurrences of self-reflection words,
///   K = max(N, X).
struct RedundancyReport {
    int n_transitions = 0;
    int x_reflections = 0;
    int k = 0;
    std::vector<LexiconMatch> matches;

    bool operator==(const RedundancyReport&) const = default;
};

/// Counts redundant reasoning in the inefficient span of `record` as split by
/// `seg`. Matching is case-insensitive and word-bounded; a sentence-head
/// phrase present in both lexicons counts once, as a transition. Total: an
/// empty inefficient segment yields an all-zero report.
RedundancyReport count_redundancy(const RolloutRecord& record, const Segmentation& seg,
                                  const EngineConfig& config);

/// Built-in (transition_phrases, reflection_words). Lowercase, deduplicated.
std::pair<std::vector<std::string>, std::vector<std::string>> default_lexicons();

}  // namespace depo
