#pragma once

#include "agentbench/host.hpp"
#include "agentbench/json.hpp"
#include "agentbench/registry.hpp"
#include "agentbench/task.hpp"
#include "agentbench/tokenizer.hpp"
#include "agentbench/usage.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace agentbench {

enum class Role { system, user, assistant, tool, continuation };
enum class Finish { tool_use, end_of_turn };
enum class Termination { answered, budget_forced, turn_capped, aborted };

std::string_view to_string(Role role);
std::string_view to_string(Finish finish);
std::string_view to_string(Termination termination);
Role role_from_string(std::string_view text);
Termination termination_from_string(std::string_view text);

struct ToolCall {
    std::string name;
    Json arguments = Json::object();

    bool operator==(const ToolCall&) const = default;
};

struct Turn {
    Role role = Role::user;
    std::string content;
    /// Assistant turns.
    std::vector<ToolCall> tool_calls;
    std::optional<Finish> finish;
    /// Tool-result turns: the qualified tool name and outcome.
    std::string tool_name;
    std::optional<ToolStatus> tool_status;
    /// Assistant turns: usage of the model call that produced the turn.
    TokenUsage usage;
    /// Measured size of this turn alone.
    std::int64_t tokens = 0;
    /// Measured context after this turn has been appended.
    std::int64_t context = 0;

    bool operator==(const Turn&) const = default;
};

struct Trajectory {
    std::string task_id;
    Domain domain = Domain::reason;
    std::string model;
    std::uint64_t seed = 0;
    /// Size of the rendered toolset, charged to the system turn.
    std::int64_t toolset_tokens = 0;
    std::vector<Turn> turns;
    TokenUsage usage;
    std::optional<std::string> final_answer;
    /// Empty while the episode is open.
    std::optional<Termination> termination;
    std::string diagnostic;
    int forced_final_prompts = 0;

    std::int64_t context() const noexcept { return turns.empty() ? 0 : turns.back().context; }
    int count(Role role) const noexcept;
    bool open() const noexcept { return !termination.has_value(); }

    bool operator==(const Trajectory&) const = default;
};

struct SamplingParams {
    double temperature = 0.7;
    std::uint64_t seed = 0;
};

struct ModelRequest {
    std::string_view system_prompt;
    /// Every turn after the system turn.
    std::span<const Turn> history;
    /// Empty when tools are disabled for this call.
    std::string_view toolset;
    SamplingParams sampling;
    bool tools_enabled = true;
};

struct AssistantTurn {
    std::string text;
    std::vector<ToolCall> tool_calls;
    Finish finish = Finish::end_of_turn;
    /// Provider-reported usage, when available.
    std::optional<TokenUsage> usage;
};

class ModelClientFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual AssistantTurn complete(const ModelRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic client driven by a JSON script:
///
///   {"steps": [{"text": "...", "tool_calls": [{"name": "...", "arguments": {...}}]}],
///    "answer": "42" | {"choices": ["42", "41"], "weights": [0.7, 0.3]},
///    "answers_by_round": ["41", "41", "42"],
///    "forced_answer": "...", "loop_steps": false, "model": "scripted"}
///
/// Each round (the start of the episode, and each point after a continuation
/// turn) replays `steps`, then answers. The answer for round r is
/// answers_by_round[min(r, n-1)] when given, otherwise drawn from `answer`
/// with an RNG seeded by (seed, r); weights are tempered as w^(1/T) and T = 0
/// picks the heaviest choice. `loop_steps` cycles the steps and never answers.
class ScriptedClient final : public ModelClient {
public:
    struct Choice {
        std::string text;
        double weight = 1.0;
    };

    ScriptedClient() = default;
    static ScriptedClient from_json(const Json& script);

    AssistantTurn complete(const ModelRequest& request) override;
    std::string name() const override { return model_; }

    std::vector<AssistantTurn> steps;
    std::vector<Choice> answer_choices{{"", 1.0}};
    std::vector<std::string> answers_by_round;
    std::optional<std::string> forced_answer;
    bool loop_steps = false;

private:
    std::string pick_answer(int round, const SamplingParams& sampling) const;

    std::string model_ = "scripted";
};

struct EpisodeConfig {
    /// Cap on assistant turns per round (a round restarts after each continuation).
    int max_turns = 32;
    std::int64_t context_budget = 196'000;
    double temperature = 0.7;
    ToolsetMode toolset_mode = ToolsetMode::full;
    std::size_t compress_target = 120;
    /// Empty means the compiled-in universal agent prompt.
    std::string system_prompt;
    /// `{{round}}` expands to the 1-based continuation number.
    std::string continuation_template;
    std::string forced_final_prompt;

    /// Throws InvalidInput.
    void validate() const;
    Json to_json() const;
};

class NotTerminated : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// One agent episode: the loop between a model client and the host.
class Episode {
public:
    Episode(TaskInstance task, std::shared_ptr<Host> host, std::shared_ptr<ModelClient> client, EpisodeConfig config,
            std::uint64_t seed, const Tokenizer& tokenizer = default_tokenizer());

    /// Runs until the episode terminates; a no-op on a terminated episode.
    const Trajectory& run();

    /// Reopens an answered episode with one continuation turn. Throws NotTerminated.
    void inject_continuation();

    const Trajectory& trajectory() const noexcept { return trajectory_; }
    const TaskInstance& task() const noexcept { return task_; }
    const EpisodeConfig& config() const noexcept { return config_; }
    Host& host() noexcept { return *host_; }
    const Tokenizer& tokenizer() const noexcept { return *tokenizer_; }

private:
    void start();
    void append(Turn turn);
    AssistantTurn call_model(bool tools_enabled);
    int assistant_turns_this_round() const;

    TaskInstance task_;
    std::shared_ptr<Host> host_;
    std::shared_ptr<ModelClient> client_;
    EpisodeConfig config_;
    const Tokenizer* tokenizer_;
    std::string system_prompt_;
    std::string toolset_;
    Trajectory trajectory_;
    bool started_ = false;
};

Trajectory run_episode(const TaskInstance& task, Host& host, ModelClient& client, const EpisodeConfig& config,
                       std::uint64_t seed, const Tokenizer& tokenizer = default_tokenizer());

/// Appends one continuation turn rendered from `templ` and reopens the
/// trajectory. Throws NotTerminated unless termination == answered.
void inject_continuation(Trajectory& trajectory, std::string_view templ, const Tokenizer& tokenizer = default_tokenizer());

/// Size of one turn: content plus serialized tool calls.
std::int64_t turn_tokens(const Turn& turn, const Tokenizer& tokenizer);

/// Recomputes the full rendered context from scratch.
std::int64_t measure_context(const Trajectory& trajectory, const Tokenizer& tokenizer = default_tokenizer());

// --- trajectory log ------------------------------------------------------------

/// One JSON object per turn; the last record of a terminated trajectory also
/// carries `termination` and `final_answer`.
void write_trajectory_log(std::ostream& out, const Trajectory& trajectory, int sample);

struct LoggedTrajectory {
    int sample = 0;
    Trajectory trajectory;
};

/// Groups records by (task_id, sample) in order of first appearance. Throws
/// std::invalid_argument naming `source:line` on corrupt records.
std::vector<LoggedTrajectory> read_trajectory_log(std::istream& in, std::string_view source = "<log>");

} // namespace agentbench
