#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "depo/types.hpp"

namespace depo {

struct OffsetError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Cumulative character offsets of the concatenated token texts;
/// length_tokens + 1 entries, last one is the total character count.
std::vector<std::size_t> token_char_starts(const RolloutRecord& record);

/// Token whose half-open character span contains char_offset.
/// Throws OffsetError when the offset is outside the concatenated text.
std::size_t char_to_token(const RolloutRecord& record, std::size_t char_offset);

/// Collapses whitespace runs to single spaces. `offset_map` receives, for each
/// character of the result, the originating index in `text` (the first
/// whitespace character of a collapsed run).
std::string normalize_whitespace(const std::string& text,
                                 std::vector<std::size_t>* offset_map = nullptr);

/// Locates y_ans and splits the response into efficient / inefficient /
/// summary spans.
///
/// Correct verdicts resolve through three routes, in order: the reflection
/// found as a contiguous substring of the CoT (whitespace-normalized on both
/// sides, first occurrence wins), the portion ratio mapped to a token index,
/// and otherwise a conservative whole-CoT efficient span. Incorrect verdicts
/// and responses without a think marker always take the conservative span:
/// tokens we cannot attribute are never scaled.
Segmentation segment(const RolloutRecord& record, const Verdict& verdict);

}  // namespace depo
