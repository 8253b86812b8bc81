#include "depo/jsonl.hpp"

#include <fstream>

namespace depo {

using nlohmann::json;

namespace {

const char* kRolloutKeys[] = {"rollout_id",      "token_texts",
                              "token_logprob_old", "token_logprob_new",
                              "think_end_index", "is_overlong", "length_tokens"};
const char* kGroupKeys[] = {"prompt_id", "ground_truth", "rollouts"};

json rollout_to_json(const RolloutRecord& r) {
    json j = r.extra;
    j["rollout_id"] = r.rollout_id;
    j["token_texts"] = r.token_texts;
    if (r.token_logprob_old) j["token_logprob_old"] = *r.token_logprob_old;
    if (r.token_logprob_new) j["token_logprob_new"] = *r.token_logprob_new;
    if (r.think_end_index) j["think_end_index"] = *r.think_end_index;
    j["is_overlong"] = r.is_overlong;
    j["length_tokens"] = r.length_tokens;
    return j;
}

RolloutRecord rollout_from_json(const json& j, const std::string& prompt_id) {
    if (!j.is_object()) throw FormatError("rollout entry is not an object");
    RolloutRecord r;
    r.prompt_id = prompt_id;
    try {
        r.rollout_id = j.at("rollout_id").get<std::string>();
        r.token_texts = j.at("token_texts").get<std::vector<std::string>>();
        if (j.contains("token_logprob_old"))
            r.token_logprob_old = j.at("token_logprob_old").get<std::vector<double>>();
        if (j.contains("token_logprob_new"))
            r.token_logprob_new = j.at("token_logprob_new").get<std::vector<double>>();
        if (j.contains("think_end_index"))
            r.think_end_index = j.at("think_end_index").get<std::size_t>();
        r.is_overlong = j.at("is_overlong").get<bool>();
        r.length_tokens = j.at("length_tokens").get<std::size_t>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("rollout: ") + e.what());
    }
    r.extra = j;
    for (const char* k : kRolloutKeys) r.extra.erase(k);
    return r;
}

}  // namespace

std::string encode_group(const RolloutGroup& group) {
    json j = group.extra;
    j["prompt_id"] = group.prompt_id;
    j["ground_truth"] = group.ground_truth;
    json rollouts = json::array();
    for (const RolloutRecord& r : group.rollouts) rollouts.push_back(rollout_to_json(r));
    j["rollouts"] = std::move(rollouts);
    return j.dump();
}

RolloutGroup decode_group(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("group line is not an object");
    RolloutGroup g;
    try {
        g.prompt_id = j.at("prompt_id").get<std::string>();
        g.ground_truth = j.at("ground_truth").get<std::string>();
        const json& rollouts = j.at("rollouts");
        if (!rollouts.is_array()) throw FormatError("rollouts is not an array");
        for (const json& rj : rollouts) g.rollouts.push_back(rollout_from_json(rj, g.prompt_id));
    } catch (const json::exception& e) {
        throw FormatError(std::string("group: ") + e.what());
    }
    g.extra = j;
    for (const char* k : kGroupKeys) g.extra.erase(k);
    return g;
}

json verdict_to_json(const Verdict& v) {
    json j = json::object();
    j["is_correct"] = v.is_correct;
    if (v.reflection) j["reflection"] = *v.reflection;
    if (v.portion) j["portion"] = *v.portion;
    if (v.reason) j["reason"] = *v.reason;
    return j;
}

Verdict verdict_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("verdict is not an object");
    Verdict v;
    try {
        v.is_correct = j.at("is_correct").get<bool>();
        if (j.contains("reflection")) v.reflection = j.at("reflection").get<std::string>();
        if (j.contains("portion")) v.portion = j.at("portion").get<double>();
        if (j.contains("reason")) v.reason = j.at("reason").get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("verdict: ") + e.what());
    }
    return v;
}

RolloutGroup with_inline_verdicts(RolloutGroup group, const std::vector<Verdict>& verdicts) {
    if (verdicts.size() != group.rollouts.size())
        throw std::invalid_argument("verdict count does not match rollout count");
    for (std::size_t i = 0; i < verdicts.size(); ++i)
        group.rollouts[i].extra["verdict"] = verdict_to_json(verdicts[i]);
    return group;
}

std::vector<std::optional<Verdict>> inline_verdicts(const RolloutGroup& group) {
    std::vector<std::optional<Verdict>> out;
    out.reserve(group.rollouts.size());
    for (const RolloutRecord& r : group.rollouts) {
        if (r.extra.is_object() && r.extra.contains("verdict"))
            out.push_back(verdict_from_json(r.extra.at("verdict")));
        else
            out.push_back(std::nullopt);
    }
    return out;
}

json config_to_json(const EngineConfig& c) {
    return json{{"alpha", c.alpha},
                {"beta", c.beta},
                {"clip_epsilon", c.clip_epsilon},
                {"max_response_length", c.max_response_length},
                {"group_size", c.group_size},
                {"std_floor", c.std_floor},
                {"positive_floor", c.positive_floor},
                {"transition_phrases", c.transition_phrases},
                {"reflection_words", c.reflection_words},
                {"enable_adv_decouple", c.enable_adv_decouple},
                {"enable_length_penalty", c.enable_length_penalty}};
}

EngineConfig config_from_json(const json& j, EngineConfig c) {
    if (!j.is_object()) throw FormatError("config is not an object");
    try {
        if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
        if (j.contains("beta")) c.beta = j.at("beta").get<double>();
        if (j.contains("clip_epsilon")) c.clip_epsilon = j.at("clip_epsilon").get<double>();
        if (j.contains("max_response_length"))
            c.max_response_length = j.at("max_response_length").get<std::size_t>();
        if (j.contains("group_size")) c.group_size = j.at("group_size").get<std::size_t>();
        if (j.contains("std_floor")) c.std_floor = j.at("std_floor").get<double>();
        if (j.contains("positive_floor")) c.positive_floor = j.at("positive_floor").get<double>();
        if (j.contains("transition_phrases"))
            c.transition_phrases = j.at("transition_phrases").get<std::vector<std::string>>();
        if (j.contains("reflection_words"))
            c.reflection_words = j.at("reflection_words").get<std::vector<std::string>>();
        if (j.contains("enable_adv_decouple"))
            c.enable_adv_decouple = j.at("enable_adv_decouple").get<bool>();
        if (j.contains("enable_length_penalty"))
            c.enable_length_penalty = j.at("enable_length_penalty").get<bool>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    return c;
}

EngineConfig load_config(const std::string& path, EngineConfig base) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("config " + path + ": " + e.what());
    }
    return config_from_json(j, std::move(base));
}

}  // namespace depo
