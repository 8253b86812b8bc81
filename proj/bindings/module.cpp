#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "depo/advantage.hpp"
#include "depo/grm.hpp"
#include "depo/jsonl.hpp"
#include "depo/matcher.hpp"
#include "depo/objective.hpp"
#include "depo/rewards.hpp"
#include "depo/segmenter.hpp"
#include "depo/sim.hpp"
#include "depo/types.hpp"

namespace py = pybind11;
using namespace depo;

namespace {

/// exceptions surface as ValueError subclasses on the python side
template <typename E>
void register_error(py::module_& m, const char* name) {
    py::register_exception<E>(m, name, PyExc_ValueError);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Advantage shaping for group-relative policy optimization";

    py::class_<TokenRange>(m, "TokenRange")
        .def(py::init<>())
        .def(py::init([](std::size_t b, std::size_t e) {
                 return TokenRange{b, e};
             }),
             py::arg("begin"), py::arg("end"))
        .def_readwrite("begin", &TokenRange::begin)
        .def_readwrite("end", &TokenRange::end)
        .def("empty", &TokenRange::empty)
        .def("__len__", &TokenRange::size)
        .def("contains", &TokenRange::contains)
        .def(py::self == py::self)
        .def("__repr__", [](const TokenRange& r) {
            return "TokenRange(" + std::to_string(r.begin) + ", " +
                   std::to_string(r.end) + ")";
        });

    py::class_<RolloutRecord>(m, "RolloutRecord")
        .def(py::init<>())
        .def_readwrite("prompt_id", &RolloutRecord::prompt_id)
        .def_readwrite("rollout_id", &RolloutRecord::rollout_id)
        .def_readwrite("token_texts", &RolloutRecord::token_texts)
        .def_readwrite("token_logprob_old", &RolloutRecord::token_logprob_old)
        .def_readwrite("token_logprob_new", &RolloutRecord::token_logprob_new)
        .def_readwrite("think_end_index", &RolloutRecord::think_end_index)
        .def_readwrite("is_overlong", &RolloutRecord::is_overlong)
        .def_readwrite("length_tokens", &RolloutRecord::length_tokens)
        .def(py::self == py::self);

    py::class_<RolloutGroup>(m, "RolloutGroup")
        .def(py::init<>())
        .def_readwrite("prompt_id", &RolloutGroup::prompt_id)
        .def_readwrite("rollouts", &RolloutGroup::rollouts)
        .def_readwrite("ground_truth", &RolloutGroup::ground_truth)
        .def(py::self == py::self);

    py::class_<Verdict>(m, "Verdict")
        .def(py::init<>())
        .def_readwrite("is_correct", &Verdict::is_correct)
        .def_readwrite("reflection", &Verdict::reflection)
        .def_readwrite("portion", &Verdict::portion)
        .def_readwrite("reason", &Verdict::reason)
        .def(py::self == py::self);

    py::enum_<SegSource>(m, "SegSource")
        .value("reflection_match", SegSource::reflection_match)
        .value("portion_fallback", SegSource::portion_fallback)
        .value("whole_efficient", SegSource::whole_efficient)
        .value("no_think_marker", SegSource::no_think_marker);

    py::class_<Segmentation>(m, "Segmentation")
        .def(py::init<>())
        .def_readwrite("ans_index", &Segmentation::ans_index)
        .def_readwrite("efficient", &Segmentation::efficient)
        .def_readwrite("inefficient", &Segmentation::inefficient)
        .def_readwrite("summary", &Segmentation::summary)
        .def_readwrite("source", &Segmentation::source)
        .def(py::self == py::self);

    py::enum_<RolloutStatus>(m, "RolloutStatus")
        .value("correct", RolloutStatus::correct)
        .value("incorrect", RolloutStatus::incorrect)
        .value("overlong", RolloutStatus::overlong);

    py::class_<EngineConfig>(m, "EngineConfig")
        .def(py::init<>())
        .def_readwrite("alpha", &EngineConfig::alpha)
        .def_readwrite("beta", &EngineConfig::beta)
        .def_readwrite("clip_epsilon", &EngineConfig::clip_epsilon)
        .def_readwrite("max_response_length", &EngineConfig::max_response_length)
        .def_readwrite("group_size", &EngineConfig::group_size)
        .def_readwrite("std_floor", &EngineConfig::std_floor)
        .def_readwrite("positive_floor", &EngineConfig::positive_floor)
        .def_readwrite("transition_phrases", &EngineConfig::transition_phrases)
        .def_readwrite("reflection_words", &EngineConfig::reflection_words)
        .def_readwrite("enable_adv_decouple", &EngineConfig::enable_adv_decouple)
        .def_readwrite("enable_length_penalty", &EngineConfig::enable_length_penalty)
        .def(py::self == py::self);

    m.def("status_of", &status_of);
    m.def("validate_group", &validate_group, py::arg("group"),
          py::arg("config") = EngineConfig{});
    m.def("validate_config", &validate_config);
    m.def("encode_group", &encode_group);
    m.def("decode_group", &decode_group);
    m.def("with_inline_verdicts", &with_inline_verdicts);
    m.def("inline_verdicts", &inline_verdicts);

    m.def("segment", &segment);
    m.def("char_to_token", &char_to_token);
    m.def("normalize_whitespace",
          [](const std::string& s) { return normalize_whitespace(s); });

    py::enum_<MatchKind>(m, "MatchKind")
        .value("transition", MatchKind::transition)
        .value("reflection", MatchKind::reflection);

    py::class_<LexiconMatch>(m, "LexiconMatch")
        .def_readonly("entry", &LexiconMatch::entry)
        .def_readonly("begin", &LexiconMatch::begin)
        .def_readonly("end", &LexiconMatch::end)
        .def_readonly("kind", &LexiconMatch::kind);

    py::class_<RedundancyReport>(m, "RedundancyReport")
        .def_readonly("n_transitions", &RedundancyReport::n_transitions)
        .def_readonly("x_reflections", &RedundancyReport::x_reflections)
        .def_readonly("k", &RedundancyReport::k)
        .def_readonly("matches", &RedundancyReport::matches);

    m.def("count_redundancy", &count_redundancy, py::arg("record"), py::arg("seg"),
          py::arg("config") = EngineConfig{});
    m.def("default_lexicons", &default_lexicons);

    py::class_<LengthStats>(m, "LengthStats")
        .def_readonly("mean_pos", &LengthStats::mean_pos)
        .def_readonly("std_pos", &LengthStats::std_pos);

    py::class_<RewardBreakdown>(m, "RewardBreakdown")
        .def_readonly("accuracy", &RewardBreakdown::accuracy)
        .def_readonly("length", &RewardBreakdown::length)
        .def_readonly("total", &RewardBreakdown::total)
        .def_readonly("delta", &RewardBreakdown::delta)
        .def_readonly("length_stats", &RewardBreakdown::length_stats);

    m.def("accuracy_reward", &accuracy_reward);
    m.def("length_rewards", &length_rewards, py::arg("group"), py::arg("verdicts"),
          py::arg("config") = EngineConfig{});
    m.def("final_rewards", &final_rewards, py::arg("group"), py::arg("verdicts"),
          py::arg("config") = EngineConfig{});

    py::class_<AdvantageTensor>(m, "AdvantageTensor")
        .def(py::init<>())
        .def_readwrite("raw", &AdvantageTensor::raw)
        .def_readwrite("clipped", &AdvantageTensor::clipped)
        .def_readwrite("per_token", &AdvantageTensor::per_token)
        .def_readwrite("f_values", &AdvantageTensor::f_values);

    m.def("decouple_factor", &decouple_factor, py::arg("beta"), py::arg("k"));
    m.def("normalize", &normalize, py::arg("rewards"),
          py::arg("config") = EngineConfig{});
    m.def("clip_advantages", &clip_advantages, py::arg("raw"), py::arg("statuses"),
          py::arg("config") = EngineConfig{});
    m.def("decouple", &decouple, py::arg("raw"), py::arg("clipped"), py::arg("segs"),
          py::arg("reports"), py::arg("statuses"), py::arg("config") = EngineConfig{});

    m.def("surrogate", &surrogate, py::arg("group"), py::arg("adv"),
          py::arg("config") = EngineConfig{});
    m.def("surrogate_grad", &surrogate_grad, py::arg("group"), py::arg("adv"),
          py::arg("config") = EngineConfig{});

    register_error<FormatError>(m, "FormatError");
    register_error<OffsetError>(m, "OffsetError");
    register_error<TruncationError>(m, "TruncationError");
    register_error<UnparseableReply>(m, "UnparseableReply");
    register_error<TransportError>(m, "TransportError");
    register_error<MissingPolicyTerms>(m, "MissingPolicyTerms");

    py::class_<GrmSampling>(m, "GrmSampling")
        .def(py::init<>())
        .def_readwrite("temperature", &GrmSampling::temperature)
        .def_readwrite("top_p", &GrmSampling::top_p)
        .def_readwrite("max_reply_tokens", &GrmSampling::max_reply_tokens);

    py::class_<GrmRequest>(m, "GrmRequest")
        .def(py::init<>())
        .def_readwrite("problem", &GrmRequest::problem)
        .def_readwrite("ground_truth", &GrmRequest::ground_truth)
        .def_readwrite("cot_text", &GrmRequest::cot_text)
        .def_readwrite("sampling", &GrmRequest::sampling)
        .def_readwrite("cot_token_count", &GrmRequest::cot_token_count);

    m.def("make_request", &make_request);
    m.def("build_prompt", &build_prompt);
    m.def("parse_verdict", [](const std::string& text) {
        const ParsedVerdict parsed = parse_verdict(GrmReplyRaw{text});
        return py::make_tuple(parsed.verdict, parsed.warnings);
    });

    // toy simulator
    auto s = m.def_submodule("sim", "Desk-scale training simulator");
    py::enum_<sim::SimAlgorithm>(s, "SimAlgorithm")
        .value("depo", sim::SimAlgorithm::depo)
        .value("grpo", sim::SimAlgorithm::grpo)
        .value("depo_wo_decouple", sim::SimAlgorithm::depo_wo_decouple)
        .value("depo_wo_lenpen", sim::SimAlgorithm::depo_wo_lenpen);

    py::class_<sim::StepMetrics>(s, "StepMetrics")
        .def_readonly("step", &sim::StepMetrics::step)
        .def_readonly("accuracy", &sim::StepMetrics::accuracy)
        .def_readonly("mean_length", &sim::StepMetrics::mean_length)
        .def_readonly("mean_k", &sim::StepMetrics::mean_k)
        .def_readonly("overlong_rate", &sim::StepMetrics::overlong_rate)
        .def_readonly("mean_reward", &sim::StepMetrics::mean_reward);

    s.def(
        "train",
        [](const std::string& algorithm, std::size_t steps, std::uint64_t seed,
           std::size_t groups_per_step, double learning_rate, double corruption_rate) {
            const auto algo = sim::parse_algorithm(algorithm);
            if (!algo) throw py::value_error("unknown algorithm: " + algorithm);
            sim::SimOptions opts;
            opts.steps = steps;
            opts.seed = seed;
            opts.groups_per_step = groups_per_step;
            opts.learning_rate = learning_rate;
            opts.corruption_rate = corruption_rate;
            return sim::train(*algo, opts).series;
        },
        py::arg("algorithm"), py::arg("steps"), py::arg("seed"),
        py::arg("groups_per_step") = 4, py::arg("learning_rate") = 0.1,
        py::arg("corruption_rate") = 0.0);
    s.def("metrics_to_csv", &sim::metrics_to_csv);
}
