#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "depo/grm.hpp"
#include "depo/types.hpp"

namespace depo::test {

/// Record whose token texts are whitespace-joined words, one word per token
/// with its trailing space (the last token keeps no trailing space).
inline RolloutRecord record_from_words(const std::vector<std::string>& words,
                                       std::optional<std::size_t> think_end = {},
                                       const std::string& rollout_id = "r0") {
    RolloutRecord r;
    r.prompt_id = "p0";
    r.rollout_id = rollout_id;
    for (std::size_t i = 0; i < words.size(); ++i)
        r.token_texts.push_back(i + 1 < words.size() ? words[i] + " " : words[i]);
    r.think_end_index = think_end;
    r.length_tokens = r.token_texts.size();
    return r;
}

inline RolloutRecord record_with_length(std::size_t tokens, const std::string& rollout_id,
                                        bool overlong = false) {
    RolloutRecord r;
    r.prompt_id = "p0";
    r.rollout_id = rollout_id;
    for (std::size_t i = 0; i < tokens; ++i) r.token_texts.push_back("tok ");
    if (!overlong && tokens >= 2) r.think_end_index = tokens - 1;
    r.is_overlong = overlong;
    r.length_tokens = tokens;
    return r;
}

inline RolloutGroup group_of(std::vector<RolloutRecord> records,
                             const std::string& ground_truth = "42") {
    RolloutGroup g;
    g.prompt_id = records.empty() ? "p0" : records.front().prompt_id;
    g.ground_truth = ground_truth;
    g.rollouts = std::move(records);
    return g;
}

inline Verdict correct_verdict(std::optional<std::string> reflection = {},
                               std::optional<double> portion = {}) {
    Verdict v;
    v.is_correct = true;
    v.reflection = std::move(reflection);
    v.portion = portion;
    return v;
}

inline Verdict incorrect_verdict() { return {}; }

class TempFile {
  public:
    explicit TempFile(const std::string& contents = "", const std::string& suffix = ".tmp") {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("depo_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++) + suffix);
        std::ofstream out(path_);
        out << contents;
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    const std::string path() const { return path_.string(); }
    std::string read() const {
        std::ifstream in(path_);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

  private:
    std::filesystem::path path_;
};

/// CompletionTransport backed by a lambda, for scripted judge behavior.
struct FnTransport : CompletionTransport {
    std::function<std::string(const std::string& key, const std::string& prompt)> fn;

    explicit FnTransport(
        std::function<std::string(const std::string&, const std::string&)> f)
        : fn(std::move(f)) {}

    std::string complete(const std::string& key, const std::string& prompt,
                         const GrmSampling&) override {
        return fn(key, prompt);
    }
};

/// Deterministic xorshift-style generator for property tests; avoids any
/// dependence on library distribution implementations.
class TestRng {
  public:
    explicit TestRng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ULL) {}

    std::uint64_t next() {
        state_ ^= state_ << 13;
        state_ ^= state_ >> 7;
        state_ ^= state_ << 17;
        return state_;
    }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
    double in_range(double lo, double hi) { return lo + (hi - lo) * unit(); }

  private:
    std::uint64_t state_;
};

}  // namespace depo::test
