// Acceptance suite: one criterion per section, one [PASS]/[FAIL] line each.
// Usage: depo_acceptance [cli-binary-path] [golden-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "depo/advantage.hpp"
#include "depo/grm.hpp"
#include "depo/jsonl.hpp"
#include "depo/matcher.hpp"
#include "depo/objective.hpp"
#include "depo/rewards.hpp"
#include "depo/segmenter.hpp"
#include "depo/sim.hpp"
#include "helpers.hpp"

using namespace depo;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw CheckFailure(what);
}

void require_close(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), " (got %.17g, want %.17g, tol %g)", got, want, tol);
        throw CheckFailure(what + buf);
    }
}

std::string g_cli_path;
std::string g_golden_dir;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- criterion bodies -------------------------------------------------------

void criterion_f_function() {
    require(decouple_factor(0.5, 0) == 1.0, "f(0.5, 0) must be exactly 1");
    const double oracle = 1.0 - 0.5 * (1.0 - std::exp(-1.0));
    require_close(decouple_factor(0.5, 2), oracle, 1e-12, "f(0.5, 2)");
    double prev = 1.0 + 1e-15;
    for (int k = 0; k <= 100; ++k) {
        const double f = decouple_factor(0.5, k);
        require(f <= prev, "f must be non-increasing at k=" + std::to_string(k));
        require(f >= 0.5 && f <= 1.0, "f out of [1-beta, 1] at k=" + std::to_string(k));
        prev = f;
    }
}

void criterion_normalization() {
    test::TestRng rng(2024);
    const EngineConfig config;
    int centered = 0;
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t g = 2 + rng.below(15);  // G in {2..16}
        std::vector<double> rewards;
        const bool degenerate = iter % 10 == 0;
        const double constant = rng.in_range(-1, 1);
        for (std::size_t i = 0; i < g; ++i)
            rewards.push_back(degenerate ? constant : rng.in_range(-2, 2));
        const std::vector<double> raw = normalize(rewards, config);
        if (degenerate) {
            for (double a : raw) require(a == 0.0, "zero-variance group must normalize to zeros");
        } else {
            double mean = 0.0;
            for (double a : raw) mean += a;
            mean /= static_cast<double>(g);
            require(std::abs(mean) < 1e-9, "normalized advantages must center at 0");
            ++centered;
        }
    }
    require(centered > 800, "generator must exercise non-degenerate groups");
}

void criterion_clipping() {
    test::TestRng rng(515);
    const EngineConfig config;
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t g = 2 + rng.below(15);
        std::vector<double> rewards;
        std::vector<RolloutStatus> statuses;
        // force mixed correctness: one correct, one failed, rest random
        for (std::size_t i = 0; i < g; ++i) {
            double u = rng.unit();
            if (i == 0) u = 0.0;
            if (i == 1) u = 0.99;
            if (u < 0.45) {
                statuses.push_back(RolloutStatus::correct);
                rewards.push_back(1.0 + rng.in_range(-0.6, 0.3));  // length-shaped
            } else if (u < 0.75) {
                statuses.push_back(RolloutStatus::incorrect);
                rewards.push_back(0.0);
            } else {
                statuses.push_back(RolloutStatus::overlong);
                rewards.push_back(-1.0);
            }
        }
        const std::vector<double> clipped =
            clip_advantages(normalize(rewards, config), statuses, config);
        for (std::size_t i = 0; i < g; ++i) {
            if (statuses[i] == RolloutStatus::correct)
                require(clipped[i] > 0.0, "correct rollout must clip positive");
            else
                require(clipped[i] <= 0.0, "incorrect/overlong rollout must clip <= 0");
        }
    }

    // Failure case 1: a length-penalized correct rollout with a negative raw
    // advantage is lifted to the smallest positive correct advantage.
    const std::vector<double> raw1 = normalize({0.2, 1.3, 1.3, -1}, config);
    require(raw1[0] < 0.0, "fixture 1 must start with a negative correct advantage");
    const std::vector<double> fixed1 = clip_advantages(
        raw1,
        {RolloutStatus::correct, RolloutStatus::correct, RolloutStatus::correct,
         RolloutStatus::overlong},
        config);
    require(fixed1[0] == raw1[1], "negative correct advantage must lift to min positive");
    require(fixed1[3] <= 0.0, "overlong advantage must stay non-positive");

    // Failure case 2: an incorrect rollout dragged positive by an overlong
    // group mate drops to zero.
    const std::vector<double> raw2 = normalize({1, 1, 0, -1}, config);
    require(raw2[2] > 0.0, "fixture 2 must start with a positive incorrect advantage");
    const std::vector<double> fixed2 = clip_advantages(
        raw2,
        {RolloutStatus::correct, RolloutStatus::correct, RolloutStatus::incorrect,
         RolloutStatus::overlong},
        config);
    require(fixed2[2] == 0.0, "positive incorrect advantage must drop to 0");
}

void criterion_length_reward() {
    EngineConfig config;
    config.max_response_length = 1000;

    std::vector<RolloutRecord> records;
    for (std::size_t i = 0; i < 4; ++i)
        records.push_back(
            test::record_with_length((i + 1) * 100, "r" + std::to_string(i)));
    const RolloutGroup group = test::group_of(std::move(records));
    const std::vector<Verdict> correct(4, test::correct_verdict());
    const std::vector<double> rewards = length_rewards(group, correct, config);
    const double oracle =
        -0.2 * (1.0 - std::exp(-0.2 * 4.0)) * (400.0 - 250.0) / std::sqrt(12500.0);
    require_close(rewards[3], oracle, 1e-9, "worked length-reward example");
    require_close(rewards[3], -0.14776054433689426, 1e-9, "frozen oracle value");

    // z-score centering over correct rollouts
    test::TestRng rng(88);
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t g = 2 + rng.below(15);
        std::vector<RolloutRecord> recs;
        std::vector<Verdict> verdicts;
        for (std::size_t i = 0; i < g; ++i) {
            recs.push_back(
                test::record_with_length(1 + rng.below(900), "r" + std::to_string(i)));
            verdicts.push_back(rng.unit() < 0.7 ? test::correct_verdict()
                                                : test::incorrect_verdict());
        }
        const RolloutGroup rg = test::group_of(std::move(recs));
        double sum = 0.0;
        for (double r : length_rewards(rg, verdicts, config)) sum += r;
        require(std::abs(sum) < 1e-9, "length rewards must sum to zero");
    }

    double prev = 0.0;
    for (int delta = 1; delta <= 16; ++delta) {
        const double coef = 0.2 * (1.0 - std::exp(-0.2 * delta));
        require(coef > prev, "difficulty coefficient must strictly increase");
        prev = coef;
    }
}

void criterion_objective() {
    const EngineConfig config;
    auto one_token = [](double lp_old, double ratio) {
        RolloutRecord r = test::record_with_length(1, "r0");
        r.token_logprob_old = std::vector<double>{lp_old};
        r.token_logprob_new = std::vector<double>{lp_old + std::log(ratio)};
        RolloutGroup g;
        g.prompt_id = r.prompt_id;
        g.rollouts = {r};
        return g;
    };
    auto tensor_of = [](const RolloutGroup& g, double adv) {
        AdvantageTensor t;
        t.raw = {adv};
        t.clipped = {adv};
        t.f_values = {1.0};
        t.per_token = {std::vector<double>(g.rollouts[0].token_texts.size(), adv)};
        return t;
    };

    // worked clip-arm cases
    {
        const RolloutGroup g = one_token(-1.0, 1.0);
        require(surrogate_grad(g, tensor_of(g, 1.0), config)[0][0] == 1.0,
                "rho=1, A=1: gradient must be rho*A/total");
    }
    {
        const RolloutGroup g = one_token(-1.0, 1.5);
        require(surrogate(g, tensor_of(g, 1.0), config) == 1.2,
                "rho=1.5, A=1: clipped arm value");
        require(surrogate_grad(g, tensor_of(g, 1.0), config)[0][0] == 0.0,
                "rho=1.5, A=1: clipped arm has zero gradient");
    }
    {
        const RolloutGroup g = one_token(-1.0, 0.5);
        require(surrogate(g, tensor_of(g, -1.0), config) == -0.8,
                "rho=0.5, A=-1: clip binds from below");
        require(surrogate_grad(g, tensor_of(g, -1.0), config)[0][0] == 0.0,
                "rho=0.5, A=-1: clipped arm has zero gradient");
    }

    // finite differences away from clip boundaries
    test::TestRng rng(404);
    const double h = 1e-6;
    for (int iter = 0; iter < 100; ++iter) {
        const std::size_t n_rollouts = 2 + rng.below(2);
        RolloutGroup g;
        g.prompt_id = "p0";
        AdvantageTensor t;
        for (std::size_t i = 0; i < n_rollouts; ++i) {
            RolloutRecord r =
                test::record_with_length(1 + rng.below(4), "r" + std::to_string(i));
            std::vector<double> lp_old, lp_new, adv;
            for (std::size_t k = 0; k < r.token_texts.size(); ++k) {
                const double old_lp = rng.in_range(-3.0, -0.1);
                double ratio = rng.in_range(0.5, 1.5);
                while (std::abs(ratio - 0.8) < 1e-4 || std::abs(ratio - 1.2) < 1e-4)
                    ratio = rng.in_range(0.5, 1.5);
                lp_old.push_back(old_lp);
                lp_new.push_back(old_lp + std::log(ratio));
                adv.push_back(rng.in_range(-2.0, 2.0));
            }
            r.token_logprob_old = lp_old;
            r.token_logprob_new = lp_new;
            g.rollouts.push_back(r);
            t.raw.push_back(0.0);
            t.clipped.push_back(0.0);
            t.f_values.push_back(1.0);
            t.per_token.push_back(adv);
        }
        const auto grads = surrogate_grad(g, t, config);
        for (std::size_t i = 0; i < n_rollouts; ++i) {
            for (std::size_t k = 0; k < g.rollouts[i].token_logprob_new->size(); ++k) {
                RolloutGroup plus = g;
                RolloutGroup minus = g;
                (*plus.rollouts[i].token_logprob_new)[k] += h;
                (*minus.rollouts[i].token_logprob_new)[k] -= h;
                const double fd =
                    (surrogate(plus, t, config) - surrogate(minus, t, config)) / (2 * h);
                const double denom = std::max(std::abs(fd), 1e-8);
                require(std::abs(grads[i][k] - fd) / denom < 1e-5,
                        "finite-difference mismatch");
            }
        }
    }
}

void criterion_matcher() {
    // Pre-registered manual count for the fixed o_ie:
    //   "Wait, the answer is 4. Alternatively, compute 2+2 again. Wait, yes 4."
    //   X = 2 (two word-boundary "wait" hits), N = 1 ("alternatively" heads the
    //   second sentence), K = max(1, 2) = 2.
    std::vector<std::string> words = {"ok.",  "Wait,", "the", "answer", "is",
                                      "4.",   "Alternatively,", "compute", "2+2",
                                      "again.", "Wait,", "yes", "4.", "</think>"};
    const RolloutRecord record = test::record_from_words(words, words.size() - 1);
    const Segmentation seg = segment(record, test::correct_verdict("ok."));
    const RedundancyReport rep = count_redundancy(record, seg, EngineConfig{});
    require(rep.n_transitions == 1, "fixture N");
    require(rep.x_reflections == 2, "fixture X");
    require(rep.k == 2, "fixture K");

    test::TestRng rng(777);
    const std::vector<std::string> vocab = {"wait", "so",   "then.",  "answer",
                                            "alternatively,", "hence", "done.",
                                            "hold",  "on",  "maybe"};
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<std::string> ws = {"ok."};
        const std::size_t n = 1 + rng.below(14);
        for (std::size_t i = 0; i < n; ++i) ws.push_back(vocab[rng.below(vocab.size())]);
        ws.push_back("</think>");
        const RolloutRecord r = test::record_from_words(ws, ws.size() - 1);
        const Segmentation s = segment(r, test::correct_verdict("ok."));
        const RedundancyReport base = count_redundancy(r, s, EngineConfig{});

        RolloutRecord upper = r;
        for (std::string& t : upper.token_texts)
            for (char& c : t) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        require(count_redundancy(upper, s, EngineConfig{}) == base,
                "case invariance violated");

        std::vector<std::string> extended = ws;
        extended.insert(extended.end() - 1, "wait");
        const RolloutRecord more = test::record_from_words(extended, extended.size() - 1);
        const Segmentation s2 = segment(more, test::correct_verdict("ok."));
        require(count_redundancy(more, s2, EngineConfig{}).k >= base.k,
                "monotonicity violated");
    }
}

void criterion_segmenter() {
    test::TestRng rng(314);
    int reflection_cases = 0;
    int reflection_hits = 0;
    int portion_cases = 0;
    int portion_within = 0;

    for (int iter = 0; iter < 200; ++iter) {
        // unique words prevent accidental earlier occurrences
        const std::size_t cot_tokens = 30 + rng.below(40);
        std::vector<std::string> words;
        for (std::size_t i = 0; i < cot_tokens; ++i)
            words.push_back("w" + std::to_string(iter) + "x" + std::to_string(i));
        const std::size_t ans = 3 + rng.below(cot_tokens - 6);
        const std::size_t refl_begin = ans >= 4 ? ans - 3 : 0;
        words.push_back("</think>");
        words.push_back("summary");
        const std::size_t think = cot_tokens;
        const RolloutRecord record = test::record_from_words(words, think);

        std::string reflection;
        for (std::size_t i = refl_begin; i <= ans; ++i) {
            reflection += words[i];
            if (i != ans) reflection += rng.unit() < 0.4 ? "  " : " ";
        }
        if (rng.unit() < 0.3) reflection = "  " + reflection + "\n";

        const bool corrupt = iter % 4 == 0;  // every 4th case exercises the fallback
        const double true_ratio =
            static_cast<double>(ans + 1) / static_cast<double>(think + 1);
        Verdict v;
        v.is_correct = true;
        v.reflection = corrupt ? "sentence that is not there" : reflection;
        v.portion = std::clamp(true_ratio + rng.in_range(-0.1, 0.1), 0.0, 1.0);

        const Segmentation seg = segment(record, v);
        if (corrupt) {
            ++portion_cases;
            require(seg.source == SegSource::portion_fallback, "fallback not taken");
            const double achieved_ratio =
                static_cast<double>(*seg.ans_index + 1) / static_cast<double>(think + 1);
            if (std::abs(achieved_ratio - true_ratio) <= 0.15) ++portion_within;
        } else {
            ++reflection_cases;
            require(seg.source == SegSource::reflection_match, "match not taken");
            if (*seg.ans_index == ans) ++reflection_hits;
        }
    }

    const double match_rate =
        static_cast<double>(reflection_hits) / static_cast<double>(reflection_cases);
    const double within_rate =
        static_cast<double>(portion_within) / static_cast<double>(portion_cases);
    std::printf("       segmenter harness: reflection match rate %.3f, portion "
                "deviation <= 0.15 for %.3f of fallback cases\n",
                match_rate, within_rate);
    require(match_rate == 1.0, "every planted reflection must be recovered");
    require(within_rate == 1.0, "portion deviation must stay within 0.15");

    // exact portion index arithmetic
    std::vector<std::string> words(100, "w");
    words.back() = "</think>";
    const RolloutRecord r = test::record_from_words(words, 99);
    const Segmentation seg = segment(r, test::correct_verdict("absent", 0.5));
    require(seg.source == SegSource::portion_fallback && *seg.ans_index == 49,
            "ceil(0.5 * 100) - 1 must be 49");
}

void criterion_grm_protocol() {
    test::TestRng rng(606);
    const std::vector<std::string> sentences = {
        "Thus x = 7.", "So the sum is 42.", "The area equals 9 pi.",
        "Therefore n must be 13.", "Hence the answer is 0."};
    for (int iter = 0; iter < 500; ++iter) {
        Verdict v;
        v.is_correct = rng.unit() < 0.7;
        if (v.is_correct && rng.unit() < 0.8)
            v.reflection = sentences[rng.below(sentences.size())];
        if (rng.unit() < 0.7) v.portion = static_cast<double>(rng.below(1000)) / 999.0;
        if (rng.unit() < 0.5) v.reason = "checked the derivation";

        std::string reply = "Score: " + std::string(v.is_correct ? "1" : "0") + "\n";
        if (v.reflection) reply += "Reflection: " + *v.reflection + "\n";
        if (v.portion) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", *v.portion);
            reply += "Portion: " + std::string(buf) + "\n";
        }
        if (v.reason) reply += "Reason: " + *v.reason + "\n";
        const ParsedVerdict parsed = parse_verdict({reply});
        require(parsed.verdict == v, "verdict round-trip mismatch");
    }

    // error case 1: no Score
    bool threw = false;
    try {
        parse_verdict({"Portion: 0.5\nReason: hmm"});
    } catch (const UnparseableReply&) {
        threw = true;
    }
    require(threw, "missing Score must raise UnparseableReply");

    // error case 2: malformed Portion degrades with a warning
    const ParsedVerdict soft = parse_verdict({"Score: 1\nPortion: around half"});
    require(!soft.verdict.portion.has_value() && soft.warnings.size() == 1,
            "malformed Portion must degrade to absent with a warning");

    // error case 3: transport failure yields VerdictUnavailable via the mock
    std::vector<RolloutRecord> records;
    for (int i = 0; i < 3; ++i)
        records.push_back(test::record_with_length(3, "r" + std::to_string(i)));
    const RolloutGroup group = test::group_of(std::move(records));
    FileMockTransport mock(nlohmann::json{{"r0", "Score: 1"}, {"r2", "Score: 0"}});
    ScoreOptions opts;
    opts.backoff_ms = 0;
    const auto outcomes = score_group(group, mock, opts);
    require(outcomes[0].ok() && outcomes[2].ok(), "served rollouts must score");
    require(!outcomes[1].ok() &&
                outcomes[1].error->find("VerdictUnavailable") == 0,
            "missing canned reply must yield VerdictUnavailable");
}

sim::StepMetrics final_row(const sim::SimResult& r) { return r.series.back(); }

void criterion_simulation() {
    sim::SimOptions opts;
    opts.steps = 200;
    opts.seed = 7;

    const sim::SimResult depo = sim::train(sim::SimAlgorithm::depo, opts);
    const sim::SimResult grpo = sim::train(sim::SimAlgorithm::grpo, opts);
    const sim::SimResult wo_dec = sim::train(sim::SimAlgorithm::depo_wo_decouple, opts);
    const sim::SimResult wo_len = sim::train(sim::SimAlgorithm::depo_wo_lenpen, opts);

    const sim::StepMetrics fd = final_row(depo);
    const sim::StepMetrics fg = final_row(grpo);
    const sim::StepMetrics fwd = final_row(wo_dec);
    const sim::StepMetrics fwl = final_row(wo_len);
    std::printf("       final rows: depo len %.2f k %.2f acc %.2f | grpo len %.2f k "
                "%.2f acc %.2f | wo_dec k %.2f | wo_len len %.2f\n",
                fd.mean_length, fd.mean_k, fd.accuracy, fg.mean_length, fg.mean_k,
                fg.accuracy, fwd.mean_k, fwl.mean_length);

    require(fd.mean_length < fg.mean_length, "depo must end shorter than grpo");
    require(fd.mean_k < fg.mean_k, "depo must end with lower mean K than grpo");
    require(std::abs(fd.accuracy - fg.accuracy) <= 0.05,
            "depo accuracy must stay within 5 points of grpo");
    require(fwd.mean_k > fd.mean_k, "removing decoupling must raise mean K");
    require(fwl.mean_length > fd.mean_length,
            "removing the length penalty must raise mean length");

    // Thresholds frozen from the first verified oracle run (seed 7, 200 steps).
    require(fd.mean_length <= 0.60 * fg.mean_length,
            "frozen threshold: depo ends at most 60% of grpo's length");
    require(fd.mean_k <= 0.50 * fg.mean_k,
            "frozen threshold: depo ends at most 50% of grpo's mean K");
}

void criterion_determinism() {
    require(!g_cli_path.empty(), "cli path not provided");
    const std::string out1 = g_golden_dir + "/.run1.csv";
    const std::string out2 = g_golden_dir + "/.run2.csv";
    const std::string tmp1 = "/tmp/depo_accept_run1.csv";
    const std::string tmp2 = "/tmp/depo_accept_run2.csv";
    for (const auto& [arg, path] :
         std::vector<std::pair<std::string, std::string>>{{"depo", tmp1}, {"depo", tmp2}}) {
        const std::string cmd = g_cli_path + " simulate " + arg + " 200 7 " + path;
        require(std::system(cmd.c_str()) == 0, "cli run failed: " + cmd);
    }
    const std::string a = read_file(tmp1);
    const std::string b = read_file(tmp2);
    require(!a.empty() && a == b, "consecutive runs must be bit-identical");

    for (const char* algo : {"depo", "grpo", "depo_wo_decouple", "depo_wo_lenpen"}) {
        const std::string tmp = std::string("/tmp/depo_accept_") + algo + ".csv";
        const std::string cmd =
            g_cli_path + " simulate " + algo + " 200 7 " + tmp;
        require(std::system(cmd.c_str()) == 0, "cli run failed: " + cmd);
        const std::string golden = g_golden_dir + "/sim_" + algo + "_s7.csv";
        require(read_file(tmp) == read_file(golden),
                std::string("golden mismatch for ") + algo);
    }
}

struct Criterion {
    const char* name;
    double budget_seconds;
    std::function<void()> body;
};

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_cli_path = argv[1];
    if (argc > 2) g_golden_dir = argv[2];

    const std::vector<Criterion> criteria = {
        {"f-function suite", 1.0, criterion_f_function},
        {"normalization/centering", 5.0, criterion_normalization},
        {"clipping sign guarantee", 5.0, criterion_clipping},
        {"length-reward suite", 5.0, criterion_length_reward},
        {"objective/gradient suite", 30.0, criterion_objective},
        {"matcher suite", 5.0, criterion_matcher},
        {"segmenter suite", 10.0, criterion_segmenter},
        {"grm protocol", 10.0, criterion_grm_protocol},
        {"end-to-end simulation", 60.0, criterion_simulation},
        {"determinism / golden CSVs", 120.0, criterion_determinism},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            c.body();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        if (error.empty() && elapsed > c.budget_seconds)
            error = "exceeded runtime budget of " + std::to_string(c.budget_seconds) + " s";
        if (error.empty()) {
            std::printf("[PASS] %-28s (%.2f s)\n", c.name, elapsed);
        } else {
            std::printf("[FAIL] %-28s (%.2f s): %s\n", c.name, elapsed, error.c_str());
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
