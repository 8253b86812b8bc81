#include "depo/matcher.hpp"

#include <algorithm>
#include <cctype>

#include "depo/segmenter.hpp"

namespace depo {

const char* to_string(MatchKind k) {
    return k == MatchKind::transition ? "transition" : "reflection";
}

std::vector<std::string> default_transition_phrases() {
    return {"alternatively", "another way", "let me try another", "instead,",
            "on the other hand"};
}

std::vector<std::string> default_reflection_words() {
    return {"wait", "hold on", "double-check", "check again", "let me verify",
            "let me re-check"};
}

std::pair<std::vector<std::string>, std::vector<std::string>> default_lexicons() {
    return {default_transition_phrases(), default_reflection_words()};
}

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool is_sentence_break(char c) { return c == '.' || c == '!' || c == '?' || c == '\n'; }

/// Word-bounded, case-insensitive match of `entry` at `pos` of lowered `text`.
/// Boundary checks are trivially satisfied when the entry itself begins or
/// ends with a non-word character (e.g. a trailing comma).
bool matches_at(const std::string& text, std::size_t pos, const std::string& entry) {
    if (pos + entry.size() > text.size()) return false;
    if (text.compare(pos, entry.size(), entry) != 0) return false;
    if (is_word_char(entry.front()) && pos > 0 && is_word_char(text[pos - 1])) return false;
    const std::size_t end = pos + entry.size();
    if (is_word_char(entry.back()) && end < text.size() && is_word_char(text[end])) return false;
    return true;
}

}  // namespace

RedundancyReport count_redundancy(const RolloutRecord& record, const Segmentation& seg,
                                  const EngineConfig& config) {
    RedundancyReport report;
    if (seg.inefficient.empty()) return report;

    const std::vector<std::size_t> starts = token_char_starts(record);
    const std::size_t ext_begin = starts[seg.inefficient.begin];
    const std::size_t ext_end = starts[seg.inefficient.end];
    if (ext_begin >= ext_end) return report;

    std::string text;
    text.reserve(starts.back());
    for (const std::string& t : record.token_texts) text += t;
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    // Sentence heads: within each sentence of the inefficient extent, skip
    // leading whitespace/punctuation and take the longest transition phrase.
    std::size_t sentence_start = ext_begin;
    while (sentence_start < ext_end) {
        std::size_t sentence_end = sentence_start;
        while (sentence_end < ext_end && !is_sentence_break(text[sentence_end])) ++sentence_end;

        std::size_t head = sentence_start;
        while (head < sentence_end && !is_word_char(text[head])) ++head;
        if (head < sentence_end) {
            const std::string* best = nullptr;
            for (const std::string& entry : config.transition_phrases) {
                if (head + entry.size() <= ext_end && matches_at(text, head, entry) &&
                    (!best || entry.size() > best->size()))
                    best = &entry;
            }
            if (best) {
                ++report.n_transitions;
                report.matches.push_back(
                    {*best, head, head + best->size(), MatchKind::transition});
            }
        }
        sentence_start = sentence_end + 1;
    }

    // Self-reflection words anywhere in the extent; hits swallowed by a
    // sentence-head transition span count once, as the transition.
    for (const std::string& entry : config.reflection_words) {
        std::size_t from = ext_begin;
        while (from + entry.size() <= ext_end) {
            const std::size_t pos = text.find(entry, from);
            if (pos == std::string::npos || pos + entry.size() > ext_end) break;
            if (!matches_at(text, pos, entry)) {
                from = pos + 1;
                continue;
            }
            const bool inside_transition = std::any_of(
                report.matches.begin(), report.matches.end(), [&](const LexiconMatch& m) {
                    return m.kind == MatchKind::transition && pos >= m.begin &&
                           pos + entry.size() <= m.end;
                });
            if (!inside_transition) {
                ++report.x_reflections;
                report.matches.push_back({entry, pos, pos + entry.size(), MatchKind::reflection});
            }
            from = pos + entry.size();
        }
    }

    std::stable_sort(report.matches.begin(), report.matches.end(),
                     [](const LexiconMatch& a, const LexiconMatch& b) {
                         return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
                     });
    report.k = std::max(report.n_transitions, report.x_reflections);
    return report;
}

}  // namespace depo
