#include "agentbench/task.hpp"

#include "agentbench/prompts.hpp"
#include "agentbench/text.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace agentbench {

std::string_view to_string(Domain domain)
{
    switch (domain) {
    case Domain::search:
        return "search";
    case Domain::code:
        return "code";
    case Domain::reason:
        return "reason";
    case Domain::tool_use:
        return "tool-use";
    }
    return "reason";
}

Domain domain_from_string(std::string_view text)
{
    const auto lower = to_lower(trim(text));
    if (lower == "search")
        return Domain::search;
    if (lower == "code" || lower == "coding")
        return Domain::code;
    if (lower == "reason" || lower == "reasoning")
        return Domain::reason;
    if (lower == "tool-use" || lower == "tool_use" || lower == "tool-call" || lower == "tool-calling")
        return Domain::tool_use;
    throw std::invalid_argument("unknown domain: '" + std::string(text) + "'");
}

TaskInstance TaskInstance::from_json(const Json& record)
{
    if (!record.is_object())
        throw std::invalid_argument("task record must be an object");
    TaskInstance task;
    task.id = record.value("id", std::string{});
    if (task.id.empty())
        throw std::invalid_argument("task record without id");
    task.domain = domain_from_string(record.value("domain", std::string{}));
    task.prompt = record.value("prompt", std::string{});
    if (task.prompt.empty())
        throw std::invalid_argument("task '" + task.id + "' has an empty prompt");
    if (auto policy = record.find("policy"); policy != record.end() && policy->is_string())
        task.policy = policy->get<std::string>();
    task.evaluator = record.value("evaluator", std::string("exact_match"));
    task.gold = record.value("gold", Json::object());
    task.script = record.value("script", Json::object());
    return task;
}

Json TaskInstance::to_json() const
{
    Json out = Json::object();
    out["id"] = id;
    out["domain"] = to_string(domain);
    out["prompt"] = prompt;
    if (policy)
        out["policy"] = *policy;
    out["evaluator"] = evaluator;
    out["gold"] = gold;
    out["script"] = script;
    return out;
}

std::vector<TaskInstance> parse_task_suite(std::string_view jsonl, std::string_view source)
{
    std::vector<TaskInstance> tasks;
    std::unordered_set<std::string> ids;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (trim(line).empty())
            continue;
        const auto where = std::string(source) + ":" + std::to_string(line_no);
        Json record = Json::parse(line, nullptr, false);
        if (record.is_discarded())
            throw std::invalid_argument(where + ": not valid JSON");
        try {
            tasks.push_back(TaskInstance::from_json(record));
        } catch (const std::exception& e) {
            throw std::invalid_argument(where + ": " + e.what());
        }
        if (!ids.insert(tasks.back().id).second)
            throw std::invalid_argument(where + ": duplicate task id '" + tasks.back().id + "'");
    }
    return tasks;
}

std::vector<TaskInstance> load_task_suite(const std::filesystem::path& path)
{
    return parse_task_suite(prompts::read_file(path), path.string());
}

} // namespace agentbench
