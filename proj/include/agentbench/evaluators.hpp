#pragma once

#include "agentbench/host.hpp"
#include "agentbench/runtime.hpp"
#include "agentbench/task.hpp"

#include <functional>
#include <map>
#include <stdexcept>
#include <string>

namespace agentbench {

class EvaluatorContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class UnknownEvaluator : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct EvalContext {
    const TaskInstance& task;
    const Trajectory& trajectory;
    /// The host the episode ran against; required by final-state evaluators.
    Host* host = nullptr;
};

using Evaluator = std::function<double(const EvalContext&)>;

class EvaluatorRegistry {
public:
    /// exact_match, kv_final_state, rubric.
    static EvaluatorRegistry builtin();

    void add(std::string name, Evaluator evaluator);
    bool contains(std::string_view name) const;
    /// Throws UnknownEvaluator.
    const Evaluator& at(std::string_view name) const;

private:
    std::map<std::string, Evaluator, std::less<>> evaluators_;
};

/// Reward in [0, 1]. Anything else (NaN included) throws EvaluatorContractViolation.
double evaluate_outcome(const TaskInstance& task, const Trajectory& trajectory, Host* host = nullptr,
                        const EvaluatorRegistry& registry = EvaluatorRegistry::builtin());

/// Throws UnknownEvaluator naming the first task whose binding does not resolve.
void check_bindings(std::span<const TaskInstance> tasks, const EvaluatorRegistry& registry = EvaluatorRegistry::builtin());

} // namespace agentbench
