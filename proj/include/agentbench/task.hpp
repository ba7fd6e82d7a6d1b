#pragma once

#include "agentbench/json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agentbench {

enum class Domain { search, code, reason, tool_use };

inline constexpr Domain kAllDomains[] = {Domain::search, Domain::code, Domain::reason, Domain::tool_use};

std::string_view to_string(Domain domain);
/// Accepts "search", "code"/"coding", "reason"/"reasoning", "tool-use"/"tool_use"/"tool-call".
Domain domain_from_string(std::string_view text);

struct TaskInstance {
    std::string id;
    Domain domain = Domain::reason;
    std::string prompt;
    std::optional<std::string> policy;
    /// Name of the evaluator in the EvaluatorRegistry.
    std::string evaluator = "exact_match";
    /// Evaluator-specific gold data (answer, expected state, rubric checks).
    Json gold = Json::object();
    /// Behaviour description consumed by the scripted model client.
    Json script = Json::object();

    static TaskInstance from_json(const Json& record);
    Json to_json() const;
};

/// One JSON object per line. Throws std::invalid_argument naming the bad line,
/// including duplicate ids.
std::vector<TaskInstance> parse_task_suite(std::string_view jsonl, std::string_view source = "<tasks>");
std::vector<TaskInstance> load_task_suite(const std::filesystem::path& path);

} // namespace agentbench
