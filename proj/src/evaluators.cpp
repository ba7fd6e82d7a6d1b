#include "agentbench/evaluators.hpp"

#include "agentbench/text.hpp"

#include <cmath>

namespace agentbench {

namespace {

std::string gold_answer(const TaskInstance& task)
{
    if (task.gold.is_string())
        return task.gold.get<std::string>();
    if (task.gold.is_object() && task.gold.contains("answer")) {
        const auto& answer = task.gold["answer"];
        return answer.is_string() ? answer.get<std::string>() : answer.dump();
    }
    throw InvalidInput("task '" + task.id + "': exact_match needs gold.answer");
}

double exact_match(const EvalContext& ctx)
{
    const auto expected = gold_answer(ctx.task);
    if (!ctx.trajectory.final_answer)
        return 0.0;
    return trim(*ctx.trajectory.final_answer) == trim(expected) ? 1.0 : 0.0;
}

double kv_final_state(const EvalContext& ctx)
{
    const auto& gold = ctx.task.gold;
    if (!gold.is_object() || !gold.contains("state") || !gold["state"].is_object())
        throw InvalidInput("task '" + ctx.task.id + "': kv_final_state needs gold.state");
    if (ctx.host == nullptr)
        throw InvalidInput("task '" + ctx.task.id + "': kv_final_state needs the episode's host");
    const auto server = gold.value("server", std::string("kv"));

    const auto result = ctx.host->call_server_tool(server, "dump", Json::object());
    if (!result.ok())
        return 0.0;
    Json state;
    try {
        state = Json::parse(result.text());
    } catch (const Json::parse_error&) {
        return 0.0;
    }
    return state == gold["state"] ? 1.0 : 0.0;
}

// Fraction of gold checks (case-insensitive substrings) present in the answer.
double rubric(const EvalContext& ctx)
{
    const auto& gold = ctx.task.gold;
    if (!gold.is_object() || !gold.contains("checks") || !gold["checks"].is_array() || gold["checks"].empty())
        throw InvalidInput("task '" + ctx.task.id + "': rubric needs a non-empty gold.checks");
    if (!ctx.trajectory.final_answer)
        return 0.0;
    const auto answer = to_lower(*ctx.trajectory.final_answer);
    std::size_t hits = 0;
    for (const auto& check : gold["checks"]) {
        if (answer.find(to_lower(check.get<std::string>())) != std::string::npos)
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(gold["checks"].size());
}

} // namespace

EvaluatorRegistry EvaluatorRegistry::builtin()
{
    EvaluatorRegistry registry;
    registry.add("exact_match", exact_match);
    registry.add("kv_final_state", kv_final_state);
    registry.add("rubric", rubric);
    return registry;
}

void EvaluatorRegistry::add(std::string name, Evaluator evaluator)
{
    if (!evaluator)
        throw std::invalid_argument("evaluator '" + name + "' is empty");
    evaluators_[std::move(name)] = std::move(evaluator);
}

bool EvaluatorRegistry::contains(std::string_view name) const
{
    return evaluators_.find(name) != evaluators_.end();
}

const Evaluator& EvaluatorRegistry::at(std::string_view name) const
{
    const auto it = evaluators_.find(name);
    if (it == evaluators_.end())
        throw UnknownEvaluator("unknown evaluator '" + std::string(name) + "'");
    return it->second;
}

double evaluate_outcome(const TaskInstance& task, const Trajectory& trajectory, Host* host, const EvaluatorRegistry& registry)
{
    const double reward = registry.at(task.evaluator)(EvalContext{task, trajectory, host});
    if (!(reward >= 0.0 && reward <= 1.0))
        throw EvaluatorContractViolation("evaluator '" + task.evaluator + "' returned " + format_number(reward)
                                         + " for task '" + task.id + "'; rewards must lie in [0, 1]");
    return reward;
}

void check_bindings(std::span<const TaskInstance> tasks, const EvaluatorRegistry& registry)
{
    for (const auto& task : tasks) {
        if (!registry.contains(task.evaluator))
            throw UnknownEvaluator("task '" + task.id + "' is bound to unknown evaluator '" + task.evaluator + "'");
    }
}

} // namespace agentbench
