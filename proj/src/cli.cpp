#include "depo/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "depo/advantage.hpp"
#include "depo/grm.hpp"
#include "depo/jsonl.hpp"
#include "depo/matcher.hpp"
#include "depo/objective.hpp"
#include "depo/rewards.hpp"
#include "depo/segmenter.hpp"
#include "depo/sim.hpp"
#include "depo/types.hpp"

namespace depo::cli {

namespace {

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  malformed group in the input (reported with its line number)\n"
    "  2  unreadable input, config, or bad usage\n"
    "  3  judge endpoint unreachable or a verdict unavailable\n"
    "  4  simulation diverged\n";

struct LineSink {
    std::ofstream file;
    std::ostream* out = nullptr;

    static std::optional<LineSink> open(const std::string& path, std::string& err) {
        LineSink sink;
        if (path == "-") {
            sink.out = &std::cout;
            return sink;
        }
        sink.file.open(path);
        if (!sink.file) {
            err = "cannot open output file: " + path;
            return std::nullopt;
        }
        sink.out = &sink.file;
        return sink;
    }
};

struct LineSource {
    std::ifstream file;
    std::istream* in = nullptr;

    static std::optional<LineSource> open(const std::string& path, std::string& err) {
        LineSource src;
        if (path == "-") {
            src.in = &std::cin;
            return src;
        }
        src.file.open(path);
        if (!src.file) {
            err = "cannot open input file: " + path;
            return std::nullopt;
        }
        src.in = &src.file;
        return src;
    }
};

struct CommonOpts {
    std::string input;
    std::string config_path;
    std::string output = "-";
    std::string mock_replies;
    std::string problem = "(problem statement unavailable)";
    bool labels_from_file = false;
    bool no_decouple = false;
    bool no_length_penalty = false;
};

std::optional<EngineConfig> resolve_config(const CommonOpts& o, int& exit_code) {
    EngineConfig config;
    try {
        if (!o.config_path.empty()) config = load_config(o.config_path);
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = kExitUnreadableInput;
        return std::nullopt;
    }
    if (o.no_decouple) config.enable_adv_decouple = false;
    if (o.no_length_penalty) config.enable_length_penalty = false;
    const std::vector<std::string> violations = validate_config(config);
    if (!violations.empty()) {
        for (const std::string& v : violations) std::cerr << "config error: " << v << "\n";
        exit_code = kExitUnreadableInput;
        return std::nullopt;
    }
    return config;
}

std::unique_ptr<CompletionTransport> resolve_transport(const CommonOpts& o,
                                                       std::string& err) {
    try {
        if (!o.mock_replies.empty())
            return std::make_unique<FileMockTransport>(o.mock_replies);
        return HttpCompletionTransport::from_env();
    } catch (const TransportError& e) {
        err = e.what();
        return nullptr;
    }
}

/// Per-group verdict resolution. Returns nullopt and records the failure
/// class when the group cannot be scored.
std::optional<std::vector<Verdict>> resolve_verdicts(
    const RolloutGroup& group, std::size_t line_no, const CommonOpts& o,
    CompletionTransport* transport, bool& malformed, bool& grm_failed) {
    if (o.labels_from_file) {
        std::vector<std::optional<Verdict>> inline_v = inline_verdicts(group);
        std::vector<Verdict> verdicts;
        for (std::size_t i = 0; i < inline_v.size(); ++i) {
            if (!inline_v[i]) {
                std::cerr << "line " << line_no << ": rollout "
                          << group.rollouts[i].rollout_id << " has no inline verdict\n";
                malformed = true;
                return std::nullopt;
            }
            verdicts.push_back(*inline_v[i]);
        }
        return verdicts;
    }

    ScoreOptions opts;
    opts.problem = o.problem;
    const std::vector<VerdictOutcome> outcomes = score_group(group, *transport, opts);
    std::vector<Verdict> verdicts;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        for (const std::string& w : outcomes[i].warnings)
            std::cerr << "line " << line_no << ": rollout "
                      << group.rollouts[i].rollout_id << ": warning: " << w << "\n";
        if (!outcomes[i].ok()) {
            std::cerr << "line " << line_no << ": rollout "
                      << group.rollouts[i].rollout_id << ": " << *outcomes[i].error << "\n";
            grm_failed = true;
            return std::nullopt;
        }
        verdicts.push_back(*outcomes[i].verdict);
    }
    return verdicts;
}

struct GroupShaping {
    std::vector<Verdict> verdicts;
    std::vector<RolloutStatus> statuses;
    std::vector<Segmentation> segs;
    std::vector<RedundancyReport> reports;
    std::vector<RewardBreakdown> rewards;
    AdvantageTensor tensor;
};

GroupShaping shape_group(const RolloutGroup& group, std::vector<Verdict> verdicts,
                         const EngineConfig& config) {
    GroupShaping s;
    s.verdicts = std::move(verdicts);
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        s.statuses.push_back(status_of(group.rollouts[i], s.verdicts[i]));
        s.segs.push_back(segment(group.rollouts[i], s.verdicts[i]));
        s.reports.push_back(count_redundancy(group.rollouts[i], s.segs.back(), config));
    }
    s.rewards = final_rewards(group, s.verdicts, config);
    std::vector<double> totals;
    for (const RewardBreakdown& b : s.rewards) totals.push_back(b.total);
    const std::vector<double> raw = normalize(totals, config);
    const std::vector<double> clipped = clip_advantages(raw, s.statuses, config);
    s.tensor = decouple(raw, clipped, s.segs, s.reports, s.statuses, config);
    return s;
}

nlohmann::json shaping_to_json(const RolloutGroup& group, const GroupShaping& s) {
    nlohmann::json out;
    out["prompt_id"] = group.prompt_id;
    out["delta"] = s.rewards.empty() ? 0 : s.rewards.front().delta;
    nlohmann::json rollouts = nlohmann::json::array();
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        nlohmann::json r;
        r["rollout_id"] = group.rollouts[i].rollout_id;
        r["status"] = to_string(s.statuses[i]);
        r["segmentation_source"] = to_string(s.segs[i].source);
        r["k"] = s.reports[i].k;
        r["accuracy_reward"] = s.rewards[i].accuracy;
        r["length_reward"] = s.rewards[i].length;
        r["total_reward"] = s.rewards[i].total;
        r["advantage_raw"] = s.tensor.raw[i];
        r["advantage_clipped"] = s.tensor.clipped[i];
        r["f"] = s.tensor.f_values[i];
        r["per_token_advantages"] = s.tensor.per_token[i];
        rollouts.push_back(std::move(r));
    }
    out["rollouts"] = std::move(rollouts);
    return out;
}

int final_exit(bool malformed, bool grm_failed) {
    if (grm_failed) return kExitGrmUnavailable;
    if (malformed) return kExitMalformedGroup;
    return kExitOk;
}

int cmd_advantages(const CommonOpts& o) {
    int exit_code = kExitOk;
    const std::optional<EngineConfig> config = resolve_config(o, exit_code);
    if (!config) return exit_code;

    std::string err;
    auto source = LineSource::open(o.input, err);
    if (!source) {
        std::cerr << "error: " << err << "\n";
        return kExitUnreadableInput;
    }
    auto sink = LineSink::open(o.output, err);
    if (!sink) {
        std::cerr << "error: " << err << "\n";
        return kExitUnreadableInput;
    }

    std::unique_ptr<CompletionTransport> transport;
    if (!o.labels_from_file) {
        transport = resolve_transport(o, err);
        if (!transport) {
            std::cerr << "error: " << err << "\n";
            return kExitGrmUnavailable;
        }
    }

    bool malformed = false;
    bool grm_failed = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(*source->in, line)) {
        ++line_no;
        if (line.empty()) continue;
        RolloutGroup group;
        try {
            group = decode_group(line);
        } catch (const FormatError& e) {
            std::cerr << "line " << line_no << ": " << e.what() << "\n";
            malformed = true;
            continue;
        }
        const std::vector<std::string> violations = validate_group(group, *config);
        if (!violations.empty()) {
            for (const std::string& v : violations)
                std::cerr << "line " << line_no << ": " << v << "\n";
            malformed = true;
            continue;
        }
        auto verdicts =
            resolve_verdicts(group, line_no, o, transport.get(), malformed, grm_failed);
        if (!verdicts) continue;
        const GroupShaping shaping = shape_group(group, std::move(*verdicts), *config);
        *sink->out << shaping_to_json(group, shaping).dump() << "\n";
    }
    return final_exit(malformed, grm_failed);
}

int cmd_match(const CommonOpts& o) {
    int exit_code = kExitOk;
    CommonOpts opts = o;
    opts.labels_from_file = true;
    const std::optional<EngineConfig> config = resolve_config(opts, exit_code);
    if (!config) return exit_code;

    std::string err;
    auto source = LineSource::open(opts.input, err);
    if (!source) {
        std::cerr << "error: " << err << "\n";
        return kExitUnreadableInput;
    }

    bool malformed = false;
    bool grm_failed = false;
    std::string line;
    std::size_t line_no = 0;
    std::cout << std::left << std::setw(12) << "prompt_id" << std::setw(12)
              << "rollout_id" << std::setw(4) << "N" << std::setw(4) << "X"
              << std::setw(4) << "K" << std::setw(18) << "source"
              << "matches\n";
    while (std::getline(*source->in, line)) {
        ++line_no;
        if (line.empty()) continue;
        RolloutGroup group;
        try {
            group = decode_group(line);
        } catch (const FormatError& e) {
            std::cerr << "line " << line_no << ": " << e.what() << "\n";
            malformed = true;
            continue;
        }
        const std::vector<std::string> violations = validate_group(group, *config);
        if (!violations.empty()) {
            for (const std::string& v : violations)
                std::cerr << "line " << line_no << ": " << v << "\n";
            malformed = true;
            continue;
        }
        auto verdicts =
            resolve_verdicts(group, line_no, opts, nullptr, malformed, grm_failed);
        if (!verdicts) continue;
        for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
            const Segmentation seg = segment(group.rollouts[i], (*verdicts)[i]);
            const RedundancyReport rep =
                count_redundancy(group.rollouts[i], seg, *config);
            std::ostringstream spans;
            for (const LexiconMatch& m : rep.matches)
                spans << m.entry << "@[" << m.begin << "," << m.end << ") "
                      << to_string(m.kind) << "; ";
            std::string note = spans.str();
            if (seg.inefficient.empty()) note += "(no inefficient segment)";
            std::cout << std::left << std::setw(12) << group.prompt_id << std::setw(12)
                      << group.rollouts[i].rollout_id << std::setw(4)
                      << rep.n_transitions << std::setw(4) << rep.x_reflections
                      << std::setw(4) << rep.k << std::setw(18)
                      << to_string(seg.source) << note << "\n";
        }
    }
    return final_exit(malformed, grm_failed);
}

int cmd_score(const CommonOpts& o) {
    int exit_code = kExitOk;
    const std::optional<EngineConfig> config = resolve_config(o, exit_code);
    if (!config) return exit_code;

    std::string err;
    auto source = LineSource::open(o.input, err);
    if (!source) {
        std::cerr << "error: " << err << "\n";
        return kExitUnreadableInput;
    }
    auto sink = LineSink::open(o.output, err);
    if (!sink) {
        std::cerr << "error: " << err << "\n";
        return kExitUnreadableInput;
    }
    std::unique_ptr<CompletionTransport> transport = resolve_transport(o, err);
    if (!transport) {
        std::cerr << "error: " << err << "\n";
        return kExitGrmUnavailable;
    }

    bool malformed = false;
    bool grm_failed = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(*source->in, line)) {
        ++line_no;
        if (line.empty()) continue;
        RolloutGroup group;
        try {
            group = decode_group(line);
        } catch (const FormatError& e) {
            std::cerr << "line " << line_no << ": " << e.what() << "\n";
            malformed = true;
            continue;
        }
        const std::vector<std::string> violations = validate_group(group, *config);
        if (!violations.empty()) {
            for (const std::string& v : violations)
                std::cerr << "line " << line_no << ": " << v << "\n";
            malformed = true;
            continue;
        }
        ScoreOptions sopts;
        sopts.problem = o.problem;
        const std::vector<VerdictOutcome> outcomes = score_group(group, *transport, sopts);
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            if (outcomes[i].ok()) {
                group.rollouts[i].extra["verdict"] = verdict_to_json(*outcomes[i].verdict);
            } else {
                group.rollouts[i].extra["verdict_error"] = *outcomes[i].error;
                std::cerr << "line " << line_no << ": rollout "
                          << group.rollouts[i].rollout_id << ": " << *outcomes[i].error
                          << "\n";
                grm_failed = true;
            }
        }
        *sink->out << encode_group(group) << "\n";
    }
    return final_exit(malformed, grm_failed);
}

struct SimulateOpts {
    std::string algorithm;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    std::string out = "-";
    std::string config_path;
    std::size_t groups_per_step = 4;
    double learning_rate = 0.1;
    double corruption_rate = 0.0;
};

int cmd_simulate(const SimulateOpts& o, const std::string& usage) {
    const std::optional<sim::SimAlgorithm> algo = sim::parse_algorithm(o.algorithm);
    if (!algo) {
        std::cerr << "error: unknown algorithm \"" << o.algorithm
                  << "\" (expected depo, grpo, depo_wo_decouple, depo_wo_lenpen)\n"
                  << usage;
        return kExitUnreadableInput;
    }
    sim::SimOptions opts;
    opts.steps = o.steps;
    opts.seed = o.seed;
    opts.groups_per_step = o.groups_per_step;
    opts.learning_rate = o.learning_rate;
    opts.corruption_rate = o.corruption_rate;
    if (!o.config_path.empty()) {
        try {
            opts.engine = load_config(o.config_path, opts.engine);
        } catch (const FormatError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUnreadableInput;
        }
    }

    std::string err;
    auto sink = LineSink::open(o.out, err);
    if (!sink) {
        std::cerr << "error: " << err << "\n";
        return kExitUnreadableInput;
    }
    try {
        const sim::SimResult result = sim::train(*algo, opts);
        *sink->out << sim::metrics_to_csv(result.series);
    } catch (const sim::SimDivergence& e) {
        std::cerr << "error: simulation diverged: " << e.what() << "\n";
        return kExitDiverged;
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Advantage shaping for group-relative policy optimization:\n"
                 "decoupled token-level advantages, difficulty-aware length rewards,\n"
                 "and sign-preserving advantage clipping over rollout records."};
    app.require_subcommand(1);
    app.footer(kExitCodeHelp);

    CommonOpts adv_opts;
    CLI::App* adv = app.add_subcommand(
        "advantages", "Compute rewards and per-token advantages for each group");
    adv->add_option("input", adv_opts.input, "Rollout groups, one JSON object per line")
        ->required();
    adv->add_option("-c,--config", adv_opts.config_path, "Engine config file (JSON)");
    adv->add_option("-o,--output", adv_opts.output, "Output path (default stdout)");
    adv->add_flag("--no-decouple", adv_opts.no_decouple,
                  "Disable inefficient-token advantage scaling");
    adv->add_flag("--no-length-penalty", adv_opts.no_length_penalty,
                  "Disable the difficulty-aware length reward");
    adv->add_flag("--labels-from-file", adv_opts.labels_from_file,
                  "Read per-rollout verdicts embedded in the input instead of "
                  "calling the judge");
    adv->add_option("--mock-replies", adv_opts.mock_replies,
                    "Serve judge replies from a JSON file keyed by rollout_id");
    adv->add_option("--problem", adv_opts.problem,
                    "Problem statement embedded in judge prompts");

    CommonOpts match_opts;
    CLI::App* match = app.add_subcommand(
        "match", "Report redundant-reasoning counts (N, X, K) per rollout");
    match->add_option("input", match_opts.input, "Rollout groups with inline verdicts")
        ->required();
    match->add_option("-c,--config", match_opts.config_path, "Engine config file (JSON)");

    CommonOpts score_opts;
    CLI::App* score = app.add_subcommand(
        "score", "Score rollouts with the judge and embed verdicts in the output");
    score->add_option("input", score_opts.input, "Rollout groups, one JSON object per line")
        ->required();
    score->add_option("-c,--config", score_opts.config_path, "Engine config file (JSON)");
    score->add_option("-o,--output", score_opts.output, "Output path (default stdout)");
    score->add_option("--mock-replies", score_opts.mock_replies,
                      "Serve judge replies from a JSON file keyed by rollout_id");
    score->add_option("--problem", score_opts.problem,
                      "Problem statement embedded in judge prompts");

    SimulateOpts sim_opts;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Train the toy policy and emit a metrics CSV");
    simulate
        ->add_option("algorithm", sim_opts.algorithm,
                     "depo | grpo | depo_wo_decouple | depo_wo_lenpen")
        ->required();
    simulate->add_option("steps", sim_opts.steps, "Number of update steps")->required();
    simulate->add_option("seed", sim_opts.seed, "Deterministic run seed")->required();
    simulate->add_option("out", sim_opts.out, "CSV output path (default stdout)");
    simulate->add_option("-c,--config", sim_opts.config_path, "Engine config file (JSON)");
    simulate->add_option("--groups-per-step", sim_opts.groups_per_step,
                         "Groups sampled per update step");
    simulate->add_option("--learning-rate", sim_opts.learning_rate,
                         "Ascent step size");
    simulate->add_option("--corruption-rate", sim_opts.corruption_rate,
                         "Fraction of judge reflections to garble");

    std::vector<const char*> argv;
    argv.push_back("depo");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << app.help();
        return kExitUnreadableInput;
    }

    if (adv->parsed()) return cmd_advantages(adv_opts);
    if (match->parsed()) return cmd_match(match_opts);
    if (score->parsed()) return cmd_score(score_opts);
    if (simulate->parsed()) return cmd_simulate(sim_opts, simulate->help());
    std::cerr << app.help();
    return kExitUnreadableInput;
}

}  // namespace depo::cli
