#include "depo/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "depo/matcher.hpp"
#include "depo/objective.hpp"
#include "depo/rewards.hpp"
#include "depo/segmenter.hpp"

namespace depo::sim {

const char* symbol_text(ToySymbol s) {
    switch (s) {
        case ToySymbol::step: return "STEP. ";
        case ToySymbol::ans_a: return "ANS_a. ";
        case ToySymbol::ans_b: return "ANS_b. ";
        case ToySymbol::wait: return "WAIT. ";
        case ToySymbol::alt: return "ALT. ";
        case ToySymbol::eot: return "</think>";
    }
    return "";
}

std::optional<ToySymbol> symbol_from_text(const std::string& text) {
    for (int v = 0; v < static_cast<int>(kVocabSize); ++v) {
        if (text == symbol_text(static_cast<ToySymbol>(v)))
            return static_cast<ToySymbol>(v);
    }
    return std::nullopt;
}

std::array<double, kVocabSize> ToyPolicy::probs(int phase) const {
    std::array<double, kVocabSize> p{};
    const auto& row = logits[static_cast<std::size_t>(phase)];
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t v = 0; v < kVocabSize; ++v) {
        p[v] = std::exp(row[v] - mx);
        sum += p[v];
    }
    for (double& x : p) x /= sum;
    return p;
}

std::array<double, kVocabSize> ToyPolicy::log_probs(int phase) const {
    std::array<double, kVocabSize> lp{};
    const auto& row = logits[static_cast<std::size_t>(phase)];
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t v = 0; v < kVocabSize; ++v) sum += std::exp(row[v] - mx);
    const double log_z = mx + std::log(sum);
    for (std::size_t v = 0; v < kVocabSize; ++v) lp[v] = row[v] - log_z;
    return lp;
}

ToyPolicy initial_policy() {
    ToyPolicy p;
    // pre_answer:              STEP  ANS_a ANS_b WAIT  ALT   EOT
    p.logits[kPreAnswer] = {1.0, 0.2, 0.2, 0.3, 0.3, -1.5};
    p.logits[kPostAnswer] = {-0.5, -1.0, -1.0, 1.0, 0.3, 0.3};
    return p;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t rng_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x8F1BBCDC0A5B67C3ULL;
    for (std::uint64_t p : parts) {
        std::uint64_t seeded = h ^ p;
        h = splitmix64(seeded);
    }
    return h;
}

double CounterRng::next_unit() {
    const std::uint64_t bits = splitmix64(state_);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

RolloutGroup rollout_toy(const ToyPolicy& policy, const ToyEpisodeSpec& spec,
                         std::size_t g) {
    RolloutGroup group;
    group.prompt_id = "toy";
    group.ground_truth = std::string(1, spec.target);
    group.rollouts.reserve(g);

    for (std::size_t e = 0; e < g; ++e) {
        CounterRng rng(rng_key({spec.seed, e}));
        RolloutRecord r;
        r.prompt_id = group.prompt_id;
        r.rollout_id = "r" + std::to_string(e);
        std::vector<double> logps;

        int phase = kPreAnswer;
        for (std::size_t t = 0; t < spec.max_len; ++t) {
            const auto probs = policy.probs(phase);
            const auto lps = policy.log_probs(phase);
            const double u = rng.next_unit();
            std::size_t v = 0;
            double cdf = 0.0;
            for (; v + 1 < kVocabSize; ++v) {
                cdf += probs[v];
                if (u < cdf) break;
            }
            const auto sym = static_cast<ToySymbol>(v);
            r.token_texts.push_back(symbol_text(sym));
            logps.push_back(lps[v]);
            if (sym == ToySymbol::eot) {
                r.think_end_index = t;
                break;
            }
            if (phase == kPreAnswer && (sym == ToySymbol::ans_a || sym == ToySymbol::ans_b))
                phase = kPostAnswer;
        }
        r.is_overlong = !r.think_end_index.has_value();
        r.length_tokens = r.token_texts.size();
        r.token_logprob_old = logps;
        r.token_logprob_new = logps;
        group.rollouts.push_back(std::move(r));
    }
    return group;
}

namespace {

std::optional<std::size_t> first_answer_index(const RolloutRecord& record) {
    for (std::size_t t = 0; t < record.token_texts.size(); ++t) {
        const auto sym = symbol_from_text(record.token_texts[t]);
        if (sym == ToySymbol::ans_a || sym == ToySymbol::ans_b) return t;
    }
    return std::nullopt;
}

}  // namespace

std::vector<Verdict> verdict_toy(const RolloutGroup& group, double corruption_rate,
                                 std::uint64_t corruption_key) {
    std::vector<Verdict> verdicts;
    verdicts.reserve(group.rollouts.size());
    const ToySymbol want =
        group.ground_truth == "a" ? ToySymbol::ans_a : ToySymbol::ans_b;

    for (std::size_t j = 0; j < group.rollouts.size(); ++j) {
        const RolloutRecord& r = group.rollouts[j];
        Verdict v;
        const auto ans = first_answer_index(r);
        v.is_correct = ans && symbol_from_text(r.token_texts[*ans]) == want;
        if (v.is_correct) {
            v.reflection = r.token_texts[*ans];
            const std::size_t cot_count =
                r.think_end_index ? *r.think_end_index + 1 : r.token_texts.size();
            v.portion = static_cast<double>(*ans + 1) / static_cast<double>(cot_count);
            if (corruption_rate > 0.0) {
                CounterRng rng(rng_key({corruption_key, j}));
                if (rng.next_unit() < corruption_rate) v.reflection = "[garbled]";
            }
        }
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

std::vector<int> phases_of(const RolloutRecord& record) {
    std::vector<int> phases(record.token_texts.size(), kPreAnswer);
    const auto ans = first_answer_index(record);
    if (ans) {
        for (std::size_t t = *ans + 1; t < phases.size(); ++t) phases[t] = kPostAnswer;
    }
    return phases;
}

void refresh_new_logprobs(RolloutGroup& group, const ToyPolicy& policy) {
    const std::array<std::array<double, kVocabSize>, 2> lps = {
        policy.log_probs(kPreAnswer), policy.log_probs(kPostAnswer)};
    for (RolloutRecord& r : group.rollouts) {
        const std::vector<int> phases = phases_of(r);
        std::vector<double> fresh(r.token_texts.size(), 0.0);
        for (std::size_t t = 0; t < r.token_texts.size(); ++t) {
            const auto sym = symbol_from_text(r.token_texts[t]);
            fresh[t] = lps[static_cast<std::size_t>(phases[t])]
                          [static_cast<std::size_t>(*sym)];
        }
        r.token_logprob_new = std::move(fresh);
    }
}

std::optional<SimAlgorithm> parse_algorithm(const std::string& name) {
    if (name == "depo") return SimAlgorithm::depo;
    if (name == "grpo") return SimAlgorithm::grpo;
    if (name == "depo_wo_decouple") return SimAlgorithm::depo_wo_decouple;
    if (name == "depo_wo_lenpen") return SimAlgorithm::depo_wo_lenpen;
    return std::nullopt;
}

const char* to_string(SimAlgorithm a) {
    switch (a) {
        case SimAlgorithm::depo: return "depo";
        case SimAlgorithm::grpo: return "grpo";
        case SimAlgorithm::depo_wo_decouple: return "depo_wo_decouple";
        case SimAlgorithm::depo_wo_lenpen: return "depo_wo_lenpen";
    }
    return "unknown";
}

EngineConfig toy_engine_config() {
    EngineConfig c;
    c.max_response_length = 64;
    c.transition_phrases = {"alt"};
    c.reflection_words = {"wait"};
    return c;
}

SimOptions::SimOptions() : engine(toy_engine_config()) {}

AdvantageTensor arm_advantages(SimAlgorithm algo, const RolloutGroup& group,
                               const std::vector<Verdict>& verdicts,
                               const EngineConfig& engine,
                               std::vector<RolloutStatus>* statuses_out,
                               std::vector<RewardBreakdown>* rewards_out) {
    std::vector<RolloutStatus> statuses;
    statuses.reserve(group.rollouts.size());
    for (std::size_t i = 0; i < group.rollouts.size(); ++i)
        statuses.push_back(status_of(group.rollouts[i], verdicts[i]));

    EngineConfig cfg = engine;
    if (algo == SimAlgorithm::depo_wo_decouple) cfg.enable_adv_decouple = false;
    if (algo == SimAlgorithm::depo_wo_lenpen) cfg.enable_length_penalty = false;
    if (algo == SimAlgorithm::grpo) cfg.enable_length_penalty = false;

    const std::vector<RewardBreakdown> rewards = final_rewards(group, verdicts, cfg);
    std::vector<double> totals;
    totals.reserve(rewards.size());
    for (const RewardBreakdown& b : rewards) totals.push_back(b.total);

    AdvantageTensor tensor;
    if (algo == SimAlgorithm::grpo) {
        // Sequence-level advantages spread uniformly over tokens; no
        // sign-repair clipping and no decoupling.
        tensor.raw = normalize(totals, cfg);
        tensor.clipped = tensor.raw;
        tensor.f_values.assign(group.rollouts.size(), 1.0);
        for (std::size_t i = 0; i < group.rollouts.size(); ++i)
            tensor.per_token.emplace_back(group.rollouts[i].token_texts.size(),
                                          tensor.raw[i]);
    } else {
        std::vector<Segmentation> segs;
        std::vector<RedundancyReport> reports;
        for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
            segs.push_back(segment(group.rollouts[i], verdicts[i]));
            reports.push_back(count_redundancy(group.rollouts[i], segs.back(), cfg));
        }
        const std::vector<double> raw = normalize(totals, cfg);
        const std::vector<double> clipped = clip_advantages(raw, statuses, cfg);
        tensor = decouple(raw, clipped, segs, reports, statuses, cfg);
    }

    if (statuses_out) *statuses_out = std::move(statuses);
    if (rewards_out) *rewards_out = rewards;
    return tensor;
}

double batch_surrogate(std::vector<RolloutGroup> batch,
                       const std::vector<AdvantageTensor>& tensors,
                       const ToyPolicy& policy, const EngineConfig& engine) {
    double sum = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        refresh_new_logprobs(batch[b], policy);
        sum += surrogate(batch[b], tensors[b], engine);
    }
    return sum / static_cast<double>(batch.size());
}

PhaseLogits policy_gradient(std::vector<RolloutGroup> batch,
                            const std::vector<AdvantageTensor>& tensors,
                            const ToyPolicy& policy, const EngineConfig& engine) {
    PhaseLogits grad{};
    const std::array<std::array<double, kVocabSize>, 2> probs = {
        policy.probs(kPreAnswer), policy.probs(kPostAnswer)};

    for (std::size_t b = 0; b < batch.size(); ++b) {
        refresh_new_logprobs(batch[b], policy);
        const auto token_grads = surrogate_grad(batch[b], tensors[b], engine);
        for (std::size_t i = 0; i < batch[b].rollouts.size(); ++i) {
            const RolloutRecord& r = batch[b].rollouts[i];
            const std::vector<int> phases = phases_of(r);
            for (std::size_t t = 0; t < r.token_texts.size(); ++t) {
                const double g = token_grads[i][t];
                if (g == 0.0) continue;
                const auto phase = static_cast<std::size_t>(phases[t]);
                const auto sym = static_cast<std::size_t>(*symbol_from_text(r.token_texts[t]));
                // d logp(sym | phase) / d logit[phase][v] = [v == sym] - p(v | phase)
                for (std::size_t v = 0; v < kVocabSize; ++v)
                    grad[phase][v] += g * ((v == sym ? 1.0 : 0.0) - probs[phase][v]);
            }
        }
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (auto& row : grad)
        for (double& x : row) x *= scale;
    return grad;
}

namespace {

StepMetrics batch_metrics(std::size_t step, const std::vector<RolloutGroup>& batch,
                          const std::vector<std::vector<Verdict>>& verdicts,
                          const std::vector<std::vector<RolloutStatus>>& statuses,
                          const std::vector<std::vector<RewardBreakdown>>& rewards,
                          const EngineConfig& engine) {
    StepMetrics m;
    m.step = step;
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t overlong = 0;
    double len_sum = 0.0;
    double reward_sum = 0.0;
    double k_sum = 0.0;
    std::size_t k_count = 0;

    for (std::size_t b = 0; b < batch.size(); ++b) {
        const RolloutGroup& group = batch[b];
        for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
            ++total;
            len_sum += static_cast<double>(group.rollouts[i].length_tokens);
            reward_sum += rewards[b][i].total;
            if (statuses[b][i] == RolloutStatus::overlong) ++overlong;
            if (statuses[b][i] == RolloutStatus::correct) {
                ++correct;
                const Segmentation seg = segment(group.rollouts[i], verdicts[b][i]);
                const RedundancyReport rep =
                    count_redundancy(group.rollouts[i], seg, engine);
                k_sum += rep.k;
                ++k_count;
            }
        }
    }
    m.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    m.mean_length = total ? len_sum / static_cast<double>(total) : 0.0;
    m.mean_k = k_count ? k_sum / static_cast<double>(k_count) : 0.0;
    m.overlong_rate = total ? static_cast<double>(overlong) / static_cast<double>(total) : 0.0;
    m.mean_reward = total ? reward_sum / static_cast<double>(total) : 0.0;
    return m;
}

struct SampledStep {
    std::vector<RolloutGroup> batch;
    std::vector<AdvantageTensor> tensors;
    std::vector<std::vector<Verdict>> verdicts;
    std::vector<std::vector<RolloutStatus>> statuses;
    std::vector<std::vector<RewardBreakdown>> rewards;
};

SampledStep sample_step(SimAlgorithm algo, const SimOptions& opts,
                        const ToyPolicy& policy, std::size_t step) {
    SampledStep s;
    for (std::size_t gidx = 0; gidx < opts.groups_per_step; ++gidx) {
        ToyEpisodeSpec spec;
        spec.target = opts.target;
        spec.max_len = opts.max_len;
        spec.seed = rng_key({opts.seed, step, gidx});
        RolloutGroup group = rollout_toy(policy, spec, opts.engine.group_size);
        std::vector<Verdict> verdicts = verdict_toy(
            group, opts.corruption_rate, rng_key({opts.seed, step, gidx, 0xC0FFEEULL}));
        std::vector<RolloutStatus> statuses;
        std::vector<RewardBreakdown> rewards;
        s.tensors.push_back(
            arm_advantages(algo, group, verdicts, opts.engine, &statuses, &rewards));
        s.batch.push_back(std::move(group));
        s.verdicts.push_back(std::move(verdicts));
        s.statuses.push_back(std::move(statuses));
        s.rewards.push_back(std::move(rewards));
    }
    return s;
}

}  // namespace

SimResult train(SimAlgorithm algo, const SimOptions& options) {
    SimOptions opts = options;
    opts.engine.max_response_length = opts.max_len;

    SimResult result;
    ToyPolicy policy = initial_policy();

    {
        const SampledStep s0 = sample_step(algo, opts, policy, 0);
        result.series.push_back(
            batch_metrics(0, s0.batch, s0.verdicts, s0.statuses, s0.rewards, opts.engine));
    }

    for (std::size_t step = 1; step <= opts.steps; ++step) {
        // pi_old is the sampling policy of this step's batch; logp_new is
        // refreshed under the current parameters inside the gradient.
        const SampledStep s = sample_step(algo, opts, policy, step);
        result.series.push_back(
            batch_metrics(step, s.batch, s.verdicts, s.statuses, s.rewards, opts.engine));

        const PhaseLogits grad = policy_gradient(s.batch, s.tensors, policy, opts.engine);
        for (std::size_t phase = 0; phase < 2; ++phase) {
            for (std::size_t v = 0; v < kVocabSize; ++v) {
                policy.logits[phase][v] += opts.learning_rate * grad[phase][v];
                if (!std::isfinite(policy.logits[phase][v]))
                    throw SimDivergence(
                        "non-finite parameter at step " + std::to_string(step) +
                        " (phase " + std::to_string(phase) + ", symbol " +
                        std::to_string(v) + ")");
            }
        }
    }
    result.final_policy = policy;
    return result;
}

std::string metrics_to_csv(const std::vector<StepMetrics>& series) {
    std::string out = "step,accuracy,mean_length,mean_k,overlong_rate,mean_reward\n";
    char buf[192];
    for (const StepMetrics& m : series) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.step,
                      m.accuracy, m.mean_length, m.mean_k, m.overlong_rate, m.mean_reward);
        out += buf;
    }
    return out;
}

}  // namespace depo::sim
