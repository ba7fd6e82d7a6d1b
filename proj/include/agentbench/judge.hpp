#pragma once

#include "agentbench/runtime.hpp"
#include "agentbench/task.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace agentbench {

enum class Verdict { correct, wrong };
enum class ParseStatus { ok, malformed };

std::string_view to_string(Verdict verdict);

struct Judgment {
    std::optional<Verdict> verdict;
    std::string raw_text;
    ParseStatus parse_status = ParseStatus::malformed;
    /// The judge client failed twice; counted as Wrong.
    bool judge_failed = false;
    std::string diagnostic;

    /// Malformed and failed judgments count as Wrong.
    bool correct() const noexcept { return verdict == Verdict::correct; }
};

/// Content of the last <judgment>...</judgment> pair, case-insensitive; must be Correct or Wrong.
Judgment parse_judgment(std::string_view text);

/// Content of the last <ranking>...</ranking> pair; 1 or 2, otherwise absent.
std::optional<int> parse_ranking(std::string_view text);

/// Plain-text transcript of everything after the system turn, ending with the final answer.
std::string render_trajectory(const Trajectory& trajectory);

struct JudgePrompt {
    std::string system;
    std::string user;
};

/// Template text before the tool section becomes the system message.
JudgePrompt build_pointwise_prompt(std::string_view minimal_toolset, const TaskInstance& task, const Trajectory& trajectory,
                                   std::string_view templ = {});
JudgePrompt build_pairwise_prompt(std::string_view minimal_toolset, const TaskInstance& task, const Trajectory& first,
                                  const Trajectory& second, std::string_view templ = {});

class JudgeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct JudgeRequest {
    enum class Kind { pointwise, pairwise } kind = Kind::pointwise;
    JudgePrompt prompt;
    const TaskInstance* task = nullptr;
    /// One trajectory for point-wise, (Trajectory 1, Trajectory 2) for pair-wise.
    std::span<const Trajectory* const> trajectories;
    /// Sample indices of the trajectories within their batch.
    std::span<const std::size_t> indices;
    std::uint64_t seed = 0;
};

class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    /// Raw judge output text. May throw; callers retry once.
    virtual std::string judge(const JudgeRequest& request) = 0;
};

/// Sends the rendered prompt to a model client with tools disabled.
class ModelJudge final : public JudgeClient {
public:
    ModelJudge(ModelClient& client, double temperature) : client_(client), temperature_(temperature) { }
    std::string judge(const JudgeRequest& request) override;

private:
    ModelClient& client_;
    double temperature_;
};

/// Desk-scale stand-in for an LLM judge. Knows each trajectory's oracle
/// reward and answers correctly with probability `accuracy`, drawn from an RNG
/// seeded by the request. `inverted` flips every answer. Pair-wise ties keep
/// Trajectory 1.
class OracleJudge final : public JudgeClient {
public:
    using Oracle = std::function<double(const Trajectory&)>;

    explicit OracleJudge(Oracle oracle, double accuracy = 1.0, bool inverted = false, double threshold = 0.99);
    std::string judge(const JudgeRequest& request) override;

private:
    bool accurate(const JudgeRequest& request) const;

    Oracle oracle_;
    double accuracy_;
    bool inverted_;
    double threshold_;
};

} // namespace agentbench
