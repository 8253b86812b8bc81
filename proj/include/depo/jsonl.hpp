#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "depo/types.hpp"

namespace depo {

/// Malformed interchange line or config file.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rollout interchange: one group per line. Known keys are decoded into the
// structs; anything else rides along in `extra` and is re-emitted on write.
std::string encode_group(const RolloutGroup& group);
RolloutGroup decode_group(const std::string& line);

nlohmann::json verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

/// Attaches per-rollout verdicts under each rollout's "verdict" extra key,
/// keeping the group in the interchange format.
RolloutGroup with_inline_verdicts(RolloutGroup group,
                                  const std::vector<Verdict>& verdicts);

/// Reads verdicts embedded by with_inline_verdicts (or by the score command).
/// Entries are absent for rollouts without a "verdict" key.
std::vector<std::optional<Verdict>> inline_verdicts(const RolloutGroup& group);

nlohmann::json config_to_json(const EngineConfig& config);
/// Starts from `base` and overrides any field present in `j`.
EngineConfig config_from_json(const nlohmann::json& j, EngineConfig base = {});
EngineConfig load_config(const std::string& path, EngineConfig base = {});

}  // namespace depo
