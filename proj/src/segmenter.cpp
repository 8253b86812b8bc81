#include "depo/segmenter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace depo {

std::vector<std::size_t> token_char_starts(const RolloutRecord& record) {
    std::vector<std::size_t> starts;
    starts.reserve(record.token_texts.size() + 1);
    std::size_t off = 0;
    starts.push_back(0);
    for (const std::string& t : record.token_texts) {
        off += t.size();
        starts.push_back(off);
    }
    return starts;
}

std::size_t char_to_token(const RolloutRecord& record, std::size_t char_offset) {
    const std::vector<std::size_t> starts = token_char_starts(record);
    const std::size_t total = starts.back();
    if (char_offset >= total)
        throw OffsetError("char offset " + std::to_string(char_offset) +
                          " out of range (total " + std::to_string(total) + ")");
    // First start strictly greater than the offset; the owning token precedes it.
    auto it = std::upper_bound(starts.begin(), starts.end(), char_offset);
    return static_cast<std::size_t>(it - starts.begin()) - 1;
}

std::string normalize_whitespace(const std::string& text,
                                 std::vector<std::size_t>* offset_map) {
    std::string out;
    out.reserve(text.size());
    if (offset_map) {
        offset_map->clear();
        offset_map->reserve(text.size());
    }
    bool in_run = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            if (!in_run) {
                out.push_back(' ');
                if (offset_map) offset_map->push_back(i);
                in_run = true;
            }
        } else {
            out.push_back(text[i]);
            if (offset_map) offset_map->push_back(i);
            in_run = false;
        }
    }
    return out;
}

namespace {

std::string trim_spaces(std::string s) {
    const std::size_t b = s.find_first_not_of(' ');
    if (b == std::string::npos) return {};
    const std::size_t e = s.find_last_not_of(' ');
    return s.substr(b, e - b + 1);
}

Segmentation conservative(std::size_t cot_end, std::size_t total, SegSource source) {
    Segmentation seg;
    seg.ans_index = cot_end - 1;
    seg.efficient = {0, cot_end};
    seg.inefficient = {cot_end, cot_end};
    seg.summary = {cot_end, total};
    seg.source = source;
    return seg;
}

Segmentation at_answer(std::size_t ans, std::size_t cot_end, std::size_t total,
                       SegSource source) {
    Segmentation seg;
    seg.ans_index = ans;
    seg.efficient = {0, ans + 1};
    seg.inefficient = {ans + 1, cot_end};
    seg.summary = {cot_end, total};
    seg.source = source;
    return seg;
}

}  // namespace

Segmentation segment(const RolloutRecord& record, const Verdict& verdict) {
    const std::size_t total = record.token_texts.size();
    const bool has_marker = record.think_end_index.has_value();
    const std::size_t cot_end = has_marker ? *record.think_end_index + 1 : total;

    if (!verdict.is_correct) return conservative(cot_end, total, SegSource::whole_efficient);
    if (!has_marker) return conservative(cot_end, total, SegSource::no_think_marker);

    if (verdict.reflection) {
        std::string cot_text;
        const std::vector<std::size_t> starts = token_char_starts(record);
        cot_text.reserve(starts[cot_end]);
        for (std::size_t i = 0; i < cot_end; ++i) cot_text += record.token_texts[i];

        std::vector<std::size_t> offset_map;
        const std::string norm_cot = normalize_whitespace(cot_text, &offset_map);
        const std::string norm_refl = trim_spaces(normalize_whitespace(*verdict.reflection));
        if (!norm_refl.empty()) {
            const std::size_t pos = norm_cot.find(norm_refl);
            if (pos != std::string::npos) {
                const std::size_t last_char = offset_map[pos + norm_refl.size() - 1];
                const std::size_t ans = char_to_token(record, last_char);
                return at_answer(ans, cot_end, total, SegSource::reflection_match);
            }
        }
    }

    if (verdict.portion) {
        const double p = std::clamp(*verdict.portion, 0.0, 1.0);
        const double scaled = std::ceil(p * static_cast<double>(cot_end)) - 1.0;
        const std::size_t ans = static_cast<std::size_t>(
            std::clamp(scaled, 0.0, static_cast<double>(cot_end - 1)));
        return at_answer(ans, cot_end, total, SegSource::portion_fallback);
    }

    return conservative(cot_end, total, SegSource::whole_efficient);
}

}  // namespace depo
