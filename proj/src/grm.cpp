#include "depo/grm.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace depo {

std::size_t approx_token_count(const std::string& text) {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
        const bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_word) ++count;
        in_word = !ws;
    }
    return count;
}

GrmRequest make_request(const std::string& problem, const std::string& ground_truth,
                        const RolloutRecord& record) {
    GrmRequest req;
    req.problem = problem;
    req.ground_truth = ground_truth;
    const std::size_t cot_end =
        record.think_end_index ? *record.think_end_index + 1 : record.token_texts.size();
    for (std::size_t i = 0; i < cot_end; ++i) req.cot_text += record.token_texts[i];
    req.cot_token_count = cot_end;
    return req;
}

namespace {

constexpr const char* kPromptHeader =
    "You are a strict grader for mathematical reasoning. You are given a "
    "problem, its reference answer, and the chain of thought a model produced "
    "while solving it.\n\n";

constexpr const char* kPromptInstructions =
    "\nJudge the chain of thought against the reference answer and reply with "
    "exactly these labeled fields:\n"
    "Score: 1 if the chain of thought derives the correct final answer, "
    "otherwise 0.\n"
    "Reflection: the first sentence in the chain of thought that derives the "
    "correct answer, quoted verbatim. Omit this field when Score is 0.\n"
    "Portion: a number between 0 and 1, the fraction of the chain of thought "
    "spent up to and including that sentence.\n"
    "Reason: a short explanation of your judgement.\n";

}  // namespace

std::string build_prompt(const GrmRequest& req) {
    std::string prompt;
    prompt += kPromptHeader;
    prompt += "Problem:\n";
    prompt += req.problem;
    prompt += "\n\nReference answer:\n";
    prompt += req.ground_truth;
    prompt += "\n\nChain of thought:\n";
    prompt += req.cot_text;
    prompt += "\n";
    prompt += kPromptInstructions;

    const std::size_t cot_tokens =
        req.cot_token_count ? *req.cot_token_count : approx_token_count(req.cot_text);
    const std::size_t total = cot_tokens + approx_token_count(req.problem) +
                              approx_token_count(req.ground_truth) +
                              approx_token_count(kPromptHeader) +
                              approx_token_count(kPromptInstructions);
    if (total > kGrmPromptTokenBudget) throw TruncationError(total - kGrmPromptTokenBudget);
    return prompt;
}

namespace {

std::string to_lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

/// Returns the field name when the line opens with "<label>:" (label
/// case-insensitive, optional leading whitespace), and the value offset.
std::optional<std::pair<std::string, std::size_t>> match_label(const std::string& line) {
    static const char* kLabels[] = {"score", "reflection", "portion", "reason"};
    std::size_t b = 0;
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    for (const char* label : kLabels) {
        const std::size_t len = std::string(label).size();
        if (line.size() >= b + len + 1 && to_lower(line.substr(b, len)) == label &&
            line[b + len] == ':')
            return std::make_pair(std::string(label), b + len + 1);
    }
    return std::nullopt;
}

}  // namespace

ParsedVerdict parse_verdict(const GrmReplyRaw& raw) {
    std::optional<std::string> score, reflection, portion, reason;
    std::optional<std::string>* current = nullptr;

    std::istringstream in(raw.text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (auto label = match_label(line)) {
            const std::string value = line.substr(label->second);
            if (label->first == "score") current = &score;
            else if (label->first == "reflection") current = &reflection;
            else if (label->first == "portion") current = &portion;
            else current = &reason;
            *current = value;
        } else if (current && current->has_value()) {
            **current += "\n" + line;
        }
    }

    if (!score) throw UnparseableReply("reply has no Score field");
    const std::string score_text = trim(*score);
    bool is_correct = false;
    if (score_text == "1") is_correct = true;
    else if (score_text == "0") is_correct = false;
    else throw UnparseableReply("reply has no parseable Score: \"" + score_text + "\"");

    ParsedVerdict out;
    out.verdict.is_correct = is_correct;

    if (reflection) {
        const std::string value = trim(*reflection);
        if (!is_correct) {
            if (!value.empty())
                out.warnings.push_back("reflection ignored on an incorrect verdict");
        } else if (!value.empty()) {
            out.verdict.reflection = value;
        }
    }

    if (portion) {
        const std::string value = trim(*portion);
        char* end = nullptr;
        const double parsed = std::strtod(value.c_str(), &end);
        if (value.empty() || end != value.c_str() + value.size())
            out.warnings.push_back("malformed Portion: \"" + value + "\"");
        else
            out.verdict.portion = std::clamp(parsed, 0.0, 1.0);
    }

    if (reason) {
        const std::string value = trim(*reason);
        if (!value.empty()) out.verdict.reason = value;
    }
    return out;
}

HttpCompletionTransport::HttpCompletionTransport(std::string base_url, std::string auth_token)
    : base_url_(std::move(base_url)), auth_token_(std::move(auth_token)) {}

std::unique_ptr<HttpCompletionTransport> HttpCompletionTransport::from_env() {
    const char* url = std::getenv("GRM_URL");
    if (!url || !*url) throw TransportError("GRM_URL is not set");
    const char* token = std::getenv("GRM_TOKEN");
    return std::make_unique<HttpCompletionTransport>(url, token ? token : "");
}

std::string HttpCompletionTransport::complete(const std::string& key,
                                              const std::string& prompt,
                                              const GrmSampling& sampling) {
    (void)key;
    httplib::Client client(base_url_);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!auth_token_.empty()) headers.emplace("Authorization", "Bearer " + auth_token_);

    const nlohmann::json body = {{"prompt", prompt},
                                 {"temperature", sampling.temperature},
                                 {"top_p", sampling.top_p},
                                 {"max_tokens", sampling.max_reply_tokens}};
    auto res = client.Post("/v1/completions", headers, body.dump(), "application/json");
    if (!res) throw TransportError("completion request failed: " + to_string(res.error()));
    if (res->status != 200)
        throw TransportError("completion endpoint returned status " +
                             std::to_string(res->status));
    try {
        const nlohmann::json reply = nlohmann::json::parse(res->body);
        if (reply.contains("completion")) return reply.at("completion").get<std::string>();
        if (reply.contains("text")) return reply.at("text").get<std::string>();
        if (reply.contains("choices"))
            return reply.at("choices").at(0).at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed completion response: ") + e.what());
    }
    throw TransportError("completion response carries no completion text");
}

FileMockTransport::FileMockTransport(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TransportError("cannot open mock reply file: " + path);
    try {
        in >> replies_;
    } catch (const nlohmann::json::exception& e) {
        throw TransportError("mock reply file " + path + ": " + e.what());
    }
    if (!replies_.is_object()) throw TransportError("mock reply file is not a JSON object");
}

FileMockTransport::FileMockTransport(nlohmann::json replies) : replies_(std::move(replies)) {}

std::string FileMockTransport::complete(const std::string& key, const std::string& prompt,
                                        const GrmSampling& sampling) {
    (void)prompt;
    (void)sampling;
    if (!replies_.contains(key)) throw TransportError("no canned reply for key " + key);
    return replies_.at(key).get<std::string>();
}

std::vector<VerdictOutcome> score_group(const RolloutGroup& group,
                                        CompletionTransport& transport,
                                        const ScoreOptions& options) {
    if (group.rollouts.size() < 2)
        throw std::invalid_argument("group statistics need at least 2 rollouts");

    std::vector<VerdictOutcome> outcomes(group.rollouts.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= group.rollouts.size()) return;
            const RolloutRecord& record = group.rollouts[i];
            VerdictOutcome& out = outcomes[i];
            try {
                const GrmRequest req =
                    make_request(options.problem, group.ground_truth, record);
                const std::string prompt = build_prompt(req);
                std::string reply;
                std::size_t attempt = 0;
                for (;;) {
                    try {
                        reply = transport.complete(record.rollout_id, prompt, req.sampling);
                        break;
                    } catch (const TransportError& e) {
                        if (attempt >= options.max_retries) throw;
                        std::this_thread::sleep_for(
                            std::chrono::milliseconds(options.backoff_ms << attempt));
                        ++attempt;
                    }
                }
                ParsedVerdict parsed = parse_verdict(GrmReplyRaw{reply});
                out.verdict = std::move(parsed.verdict);
                out.warnings = std::move(parsed.warnings);
            } catch (const TransportError& e) {
                out.error = std::string("VerdictUnavailable: ") + e.what();
            } catch (const std::exception& e) {
                out.error = std::string("VerdictUnavailable: ") + e.what();
            }
        }
    };

    const std::size_t n_workers =
        std::min(std::max<std::size_t>(options.max_in_flight, 1), group.rollouts.size());
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    return outcomes;
}

}  // namespace depo
