#include "agentbench/runtime.hpp"

#include "agentbench/prompts.hpp"
#include "agentbench/text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>

namespace agentbench {

namespace {

double unit_uniform(std::mt19937_64& rng)
{
    // std::*_distribution output is implementation-defined; this is not.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

ToolCall tool_call_from_json(const Json& call)
{
    if (!call.is_object() || !call.contains("name") || !call["name"].is_string())
        throw std::invalid_argument("tool call needs a string name");
    ToolCall out{call["name"].get<std::string>(), call.value("arguments", Json::object())};
    if (!out.arguments.is_object())
        throw std::invalid_argument("tool call arguments must be an object");
    return out;
}

Turn make_turn(Role role, std::string content)
{
    Turn turn;
    turn.role = role;
    turn.content = std::move(content);
    return turn;
}

Json tool_call_to_json(const ToolCall& call)
{
    return Json{{"name", call.name}, {"arguments", call.arguments}};
}

} // namespace

std::string_view to_string(Role role)
{
    switch (role) {
    case Role::system:
        return "system";
    case Role::user:
        return "user";
    case Role::assistant:
        return "assistant";
    case Role::tool:
        return "tool";
    case Role::continuation:
        return "continuation";
    }
    return "user";
}

std::string_view to_string(Finish finish)
{
    return finish == Finish::tool_use ? "tool_use" : "end_of_turn";
}

std::string_view to_string(Termination termination)
{
    switch (termination) {
    case Termination::answered:
        return "answered";
    case Termination::budget_forced:
        return "budget_forced";
    case Termination::turn_capped:
        return "turn_capped";
    case Termination::aborted:
        return "aborted";
    }
    return "aborted";
}

Role role_from_string(std::string_view text)
{
    for (Role r : {Role::system, Role::user, Role::assistant, Role::tool, Role::continuation}) {
        if (to_string(r) == text)
            return r;
    }
    throw std::invalid_argument("unknown role '" + std::string(text) + "'");
}

Termination termination_from_string(std::string_view text)
{
    for (Termination t : {Termination::answered, Termination::budget_forced, Termination::turn_capped, Termination::aborted}) {
        if (to_string(t) == text)
            return t;
    }
    throw std::invalid_argument("unknown termination '" + std::string(text) + "'");
}

int Trajectory::count(Role role) const noexcept
{
    return static_cast<int>(std::count_if(turns.begin(), turns.end(), [role](const Turn& t) { return t.role == role; }));
}

// --- ScriptedClient --------------------------------------------------------------

ScriptedClient ScriptedClient::from_json(const Json& script)
{
    if (!script.is_object())
        throw std::invalid_argument("script must be an object");
    ScriptedClient client;
    client.model_ = script.value("model", std::string("scripted"));
    client.loop_steps = script.value("loop_steps", false);

    for (const auto& step : script.value("steps", Json::array())) {
        AssistantTurn turn;
        turn.text = step.value("text", std::string{});
        for (const auto& call : step.value("tool_calls", Json::array()))
            turn.tool_calls.push_back(tool_call_from_json(call));
        if (turn.tool_calls.empty())
            throw std::invalid_argument("script step without tool calls");
        turn.finish = Finish::tool_use;
        client.steps.push_back(std::move(turn));
    }
    if (client.loop_steps && client.steps.empty())
        throw std::invalid_argument("loop_steps requires at least one step");

    if (auto answer = script.find("answer"); answer != script.end()) {
        client.answer_choices.clear();
        if (answer->is_string()) {
            client.answer_choices.push_back({answer->get<std::string>(), 1.0});
        } else if (answer->is_object()) {
            const auto choices = answer->value("choices", Json::array());
            const auto weights = answer->value("weights", Json::array());
            if (choices.empty() || (!weights.empty() && weights.size() != choices.size()))
                throw std::invalid_argument("answer choices and weights do not line up");
            for (std::size_t i = 0; i < choices.size(); ++i) {
                const double w = weights.empty() ? 1.0 : weights[i].get<double>();
                if (!(w >= 0.0))
                    throw std::invalid_argument("answer weights must be non-negative");
                client.answer_choices.push_back({choices[i].get<std::string>(), w});
            }
        } else {
            throw std::invalid_argument("answer must be a string or a choices object");
        }
    }
    for (const auto& a : script.value("answers_by_round", Json::array()))
        client.answers_by_round.push_back(a.get<std::string>());
    if (auto forced = script.find("forced_answer"); forced != script.end() && forced->is_string())
        client.forced_answer = forced->get<std::string>();
    return client;
}

std::string ScriptedClient::pick_answer(int round, const SamplingParams& sampling) const
{
    if (!answers_by_round.empty())
        return answers_by_round[std::min<std::size_t>(static_cast<std::size_t>(round), answers_by_round.size() - 1)];
    if (answer_choices.size() == 1)
        return answer_choices.front().text;

    if (sampling.temperature <= 0.0) {
        auto best = std::max_element(answer_choices.begin(), answer_choices.end(),
                                     [](const Choice& a, const Choice& b) { return a.weight < b.weight; });
        return best->text;
    }
    std::vector<double> tempered;
    double total = 0.0;
    for (const auto& choice : answer_choices) {
        const double w = choice.weight > 0.0 ? std::pow(choice.weight, 1.0 / sampling.temperature) : 0.0;
        tempered.push_back(w);
        total += w;
    }
    std::mt19937_64 rng(mix_seed(sampling.seed, static_cast<std::uint64_t>(round)));
    const double u = unit_uniform(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < tempered.size(); ++i) {
        acc += tempered[i];
        if (u < acc)
            return answer_choices[i].text;
    }
    return answer_choices.back().text;
}

AssistantTurn ScriptedClient::complete(const ModelRequest& request)
{
    int round = 0;
    std::size_t step = 0;
    for (const auto& turn : request.history) {
        if (turn.role == Role::continuation) {
            ++round;
            step = 0;
        } else if (turn.role == Role::assistant) {
            ++step;
        }
    }

    if (!request.tools_enabled) {
        AssistantTurn out;
        out.text = forced_answer ? *forced_answer : pick_answer(round, request.sampling);
        return out;
    }
    if (loop_steps)
        return steps[step % steps.size()];
    if (step < steps.size())
        return steps[step];

    AssistantTurn out;
    out.text = pick_answer(round, request.sampling);
    return out;
}

// --- EpisodeConfig ---------------------------------------------------------------

void EpisodeConfig::validate() const
{
    if (max_turns < 1)
        throw InvalidInput("max_turns must be at least 1");
    if (context_budget <= 0)
        throw InvalidInput("context_budget must be positive");
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw InvalidInput("temperature must lie in [0, 2]");
    if (toolset_mode == ToolsetMode::compressed && compress_target == 0)
        throw InvalidInput("compress target must be at least 1");
}

Json EpisodeConfig::to_json() const
{
    Json out = Json::object();
    out["max_turns"] = max_turns;
    out["context_budget"] = context_budget;
    out["temperature"] = temperature;
    out["toolset_mode"] = to_string(toolset_mode);
    out["compress_target"] = compress_target;
    out["continuation_template"] = continuation_template.empty() ? std::string(prompts::continuation()) : continuation_template;
    out["forced_final_prompt"] = forced_final_prompt.empty() ? std::string(prompts::forced_final()) : forced_final_prompt;
    return out;
}

// --- measurement -----------------------------------------------------------------

std::int64_t turn_tokens(const Turn& turn, const Tokenizer& tokenizer)
{
    std::int64_t tokens = tokenizer.count(turn.content);
    for (const auto& call : turn.tool_calls)
        tokens += tokenizer.count(call.name) + tokenizer.count(call.arguments.dump());
    return tokens;
}

std::int64_t measure_context(const Trajectory& trajectory, const Tokenizer& tokenizer)
{
    std::int64_t total = 0;
    for (const auto& turn : trajectory.turns) {
        total += turn_tokens(turn, tokenizer);
        if (turn.role == Role::system)
            total += trajectory.toolset_tokens;
    }
    return total;
}

void inject_continuation(Trajectory& trajectory, std::string_view templ, const Tokenizer& tokenizer)
{
    if (trajectory.termination != Termination::answered)
        throw NotTerminated("continuation requires an answered episode (termination is "
                            + std::string(trajectory.termination ? to_string(*trajectory.termination) : "open") + ")");
    Turn turn;
    turn.role = Role::continuation;
    turn.content = prompts::fill(templ, "round", std::to_string(trajectory.count(Role::continuation) + 1));
    turn.tokens = turn_tokens(turn, tokenizer);
    turn.context = trajectory.context() + turn.tokens;
    trajectory.turns.push_back(std::move(turn));
    trajectory.termination.reset();
    trajectory.final_answer.reset();
}

// --- Episode ---------------------------------------------------------------------

Episode::Episode(TaskInstance task, std::shared_ptr<Host> host, std::shared_ptr<ModelClient> client, EpisodeConfig config,
                 std::uint64_t seed, const Tokenizer& tokenizer)
    : task_(std::move(task)), host_(std::move(host)), client_(std::move(client)), config_(std::move(config)), tokenizer_(&tokenizer)
{
    config_.validate();
    if (trim(task_.prompt).empty())
        throw InvalidInput("task prompt is empty");
    if (!host_ || !client_)
        throw InvalidInput("episode needs a host and a model client");
    if (config_.continuation_template.empty())
        config_.continuation_template = std::string(prompts::continuation());
    if (config_.forced_final_prompt.empty())
        config_.forced_final_prompt = std::string(prompts::forced_final());

    trajectory_.task_id = task_.id;
    trajectory_.domain = task_.domain;
    trajectory_.model = client_->name();
    trajectory_.seed = seed;
}

void Episode::append(Turn turn)
{
    turn.tokens = turn_tokens(turn, *tokenizer_);
    if (turn.role == Role::system)
        turn.tokens += trajectory_.toolset_tokens;
    turn.context = trajectory_.context() + turn.tokens;
    trajectory_.turns.push_back(std::move(turn));
}

void Episode::start()
{
    system_prompt_ = prompts::agent_system_prompt(
        config_.system_prompt.empty() ? prompts::universal_agent() : std::string_view(config_.system_prompt),
        task_.policy.value_or(""));
    toolset_ = render_toolset(host_->registry(), config_.toolset_mode, config_.compress_target);
    trajectory_.toolset_tokens = toolset_.empty() ? 0 : tokenizer_->count(toolset_);

    append(make_turn(Role::system, system_prompt_));
    append(make_turn(Role::user, task_.prompt));
    started_ = true;
}

int Episode::assistant_turns_this_round() const
{
    int n = 0;
    for (auto it = trajectory_.turns.rbegin(); it != trajectory_.turns.rend(); ++it) {
        if (it->role == Role::continuation)
            break;
        if (it->role == Role::assistant)
            ++n;
    }
    return n;
}

AssistantTurn Episode::call_model(bool tools_enabled)
{
    ModelRequest request;
    request.system_prompt = system_prompt_;
    request.history = std::span<const Turn>(trajectory_.turns).subspan(1);
    request.toolset = tools_enabled ? std::string_view(toolset_) : std::string_view{};
    request.sampling = {config_.temperature, trajectory_.seed};
    request.tools_enabled = tools_enabled;

    std::string failure;
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            return client_->complete(request);
        } catch (const std::exception& e) {
            failure = e.what();
        }
    }
    throw ModelClientFailure("model client failed twice: " + failure);
}

const Trajectory& Episode::run()
{
    if (!started_)
        start();

    while (trajectory_.open()) {
        if (assistant_turns_this_round() >= config_.max_turns) {
            trajectory_.termination = Termination::turn_capped;
            break;
        }

        const bool force_final = trajectory_.context() >= config_.context_budget && trajectory_.forced_final_prompts == 0;
        if (force_final) {
            append(make_turn(Role::user, config_.forced_final_prompt));
            ++trajectory_.forced_final_prompts;
        }

        const std::int64_t prompt_tokens = trajectory_.context();
        AssistantTurn reply;
        try {
            reply = call_model(!force_final);
        } catch (const ModelClientFailure& e) {
            trajectory_.termination = Termination::aborted;
            trajectory_.diagnostic = e.what();
            break;
        }

        Turn turn;
        turn.role = Role::assistant;
        turn.content = reply.text;
        if (!force_final)
            turn.tool_calls = std::move(reply.tool_calls);
        // The calls decide; a turn that carries both text and calls keeps going.
        turn.finish = turn.tool_calls.empty() ? Finish::end_of_turn : Finish::tool_use;
        const auto output_tokens = turn_tokens(turn, *tokenizer_);
        turn.usage = reply.usage.value_or(TokenUsage{prompt_tokens, output_tokens, true});
        trajectory_.usage += turn.usage;
        const auto calls = turn.tool_calls;
        append(std::move(turn));

        if (force_final) {
            trajectory_.final_answer = reply.text;
            trajectory_.termination = Termination::budget_forced;
            break;
        }
        if (calls.empty()) {
            trajectory_.final_answer = reply.text;
            trajectory_.termination = Termination::answered;
            break;
        }
        for (const auto& call : calls) {
            const auto result = host_->dispatch_tool_call(call.name, call.arguments);
            auto turn = make_turn(Role::tool, result.text());
            turn.tool_name = call.name;
            turn.tool_status = result.status;
            append(std::move(turn));
        }
    }
    return trajectory_;
}

void Episode::inject_continuation()
{
    agentbench::inject_continuation(trajectory_, config_.continuation_template, *tokenizer_);
}

Trajectory run_episode(const TaskInstance& task, Host& host, ModelClient& client, const EpisodeConfig& config,
                       std::uint64_t seed, const Tokenizer& tokenizer)
{
    // Non-owning handles; the caller keeps host and client alive.
    std::shared_ptr<Host> host_ref(std::shared_ptr<Host>{}, &host);
    std::shared_ptr<ModelClient> client_ref(std::shared_ptr<ModelClient>{}, &client);
    Episode episode(task, host_ref, client_ref, config, seed, tokenizer);
    return episode.run();
}

// --- log -------------------------------------------------------------------------

void write_trajectory_log(std::ostream& out, const Trajectory& trajectory, int sample)
{
    for (std::size_t i = 0; i < trajectory.turns.size(); ++i) {
        const auto& turn = trajectory.turns[i];
        Json record = Json::object();
        record["task_id"] = trajectory.task_id;
        record["domain"] = to_string(trajectory.domain);
        record["model"] = trajectory.model;
        record["sample"] = sample;
        record["seed"] = trajectory.seed;
        record["turn"] = i;
        record["role"] = to_string(turn.role);
        record["content"] = turn.content;
        if (turn.role == Role::assistant) {
            Json calls = Json::array();
            for (const auto& call : turn.tool_calls)
                calls.push_back(tool_call_to_json(call));
            record["tool_calls"] = std::move(calls);
            record["finish"] = to_string(turn.finish.value_or(Finish::end_of_turn));
            record["usage"] = Json{{"input_tokens", turn.usage.input_tokens},
                                   {"output_tokens", turn.usage.output_tokens},
                                   {"estimated", turn.usage.estimated}};
        }
        if (turn.role == Role::tool) {
            record["tool_name"] = turn.tool_name;
            record["status"] = turn.tool_status == ToolStatus::error ? "error" : "ok";
        }
        if (turn.role == Role::system)
            record["toolset_tokens"] = trajectory.toolset_tokens;
        record["tokens"] = turn.tokens;
        record["context"] = turn.context;
        if (i + 1 == trajectory.turns.size() && trajectory.termination) {
            record["termination"] = to_string(*trajectory.termination);
            record["final_answer"] = trajectory.final_answer ? Json(*trajectory.final_answer) : Json();
            if (!trajectory.diagnostic.empty())
                record["diagnostic"] = trajectory.diagnostic;
        }
        out << record.dump() << '\n';
    }
}

std::vector<LoggedTrajectory> read_trajectory_log(std::istream& in, std::string_view source)
{
    std::vector<LoggedTrajectory> out;
    std::map<std::pair<std::string, int>, std::size_t> index;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (trim(line).empty())
            continue;
        const auto where = std::string(source) + ":" + std::to_string(line_no);
        try {
            const Json record = Json::parse(line);
            const auto task_id = record.at("task_id").get<std::string>();
            const int sample = record.at("sample").get<int>();
            auto [it, inserted] = index.try_emplace({task_id, sample}, out.size());
            if (inserted) {
                LoggedTrajectory logged;
                logged.sample = sample;
                logged.trajectory.task_id = task_id;
                logged.trajectory.domain = domain_from_string(record.at("domain").get<std::string>());
                logged.trajectory.model = record.at("model").get<std::string>();
                logged.trajectory.seed = record.at("seed").get<std::uint64_t>();
                out.push_back(std::move(logged));
            }
            auto& trajectory = out[it->second].trajectory;
            if (record.at("turn").get<std::size_t>() != trajectory.turns.size())
                throw std::invalid_argument("turn index out of sequence");

            Turn turn;
            turn.role = role_from_string(record.at("role").get<std::string>());
            turn.content = record.at("content").get<std::string>();
            if (turn.role == Role::assistant) {
                for (const auto& call : record.at("tool_calls"))
                    turn.tool_calls.push_back(tool_call_from_json(call));
                turn.finish = record.at("finish").get<std::string>() == "tool_use" ? Finish::tool_use : Finish::end_of_turn;
                const auto& usage = record.at("usage");
                turn.usage = {usage.at("input_tokens").get<std::int64_t>(), usage.at("output_tokens").get<std::int64_t>(),
                              usage.value("estimated", false)};
                if (turn.usage.input_tokens < 0 || turn.usage.output_tokens < 0)
                    throw std::invalid_argument("negative token usage");
                trajectory.usage += turn.usage;
            }
            if (turn.role == Role::tool) {
                turn.tool_name = record.at("tool_name").get<std::string>();
                turn.tool_status = record.at("status").get<std::string>() == "error" ? ToolStatus::error : ToolStatus::ok;
            }
            if (turn.role == Role::system)
                trajectory.toolset_tokens = record.value("toolset_tokens", std::int64_t{0});
            turn.tokens = record.at("tokens").get<std::int64_t>();
            turn.context = record.at("context").get<std::int64_t>();
            if (turn.context < trajectory.context())
                throw std::invalid_argument("context decreased");
            trajectory.turns.push_back(std::move(turn));

            if (auto term = record.find("termination"); term != record.end()) {
                trajectory.termination = termination_from_string(term->get<std::string>());
                if (auto fa = record.find("final_answer"); fa != record.end() && fa->is_string())
                    trajectory.final_answer = fa->get<std::string>();
                trajectory.diagnostic = record.value("diagnostic", std::string{});
            }
            // Every user turn after the task prompt is a forced-final prompt.
            trajectory.forced_final_prompts = std::max(0, trajectory.count(Role::user) - 1);
        } catch (const std::exception& e) {
            throw std::invalid_argument(where + ": " + e.what());
        }
    }
    return out;
}

} // namespace agentbench
