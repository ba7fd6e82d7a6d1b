#include "agentbench/judge.hpp"

#include "agentbench/prompts.hpp"
#include "agentbench/text.hpp"

#include <random>
#include <regex>

namespace agentbench {

std::string_view to_string(Verdict verdict)
{
    return verdict == Verdict::correct ? "Correct" : "Wrong";
}

namespace {

std::optional<std::string> last_tag_content(std::string_view text, const std::regex& pattern)
{
    std::optional<std::string> last;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), pattern); it != std::sregex_iterator(); ++it)
        last = (*it)[1].str();
    return last;
}

const std::regex& judgment_tag()
{
    static const std::regex re(R"(<judgment>([\s\S]*?)</judgment>)", std::regex::icase | std::regex::ECMAScript);
    return re;
}

const std::regex& ranking_tag()
{
    static const std::regex re(R"(<ranking>([\s\S]*?)</ranking>)", std::regex::icase | std::regex::ECMAScript);
    return re;
}

std::pair<std::string, std::string> split_template(std::string_view templ)
{
    constexpr std::string_view marker = "## Available Tools";
    const auto at = templ.find(marker);
    if (at == std::string_view::npos)
        return {std::string(), std::string(templ)};
    return {std::string(trim(templ.substr(0, at))), std::string(templ.substr(at))};
}

double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

Judgment parse_judgment(std::string_view text)
{
    Judgment out;
    out.raw_text = std::string(text);
    const auto content = last_tag_content(text, judgment_tag());
    if (!content)
        return out;
    const auto verdict = to_lower(trim(*content));
    if (verdict == "correct")
        out.verdict = Verdict::correct;
    else if (verdict == "wrong")
        out.verdict = Verdict::wrong;
    else
        return out;
    out.parse_status = ParseStatus::ok;
    return out;
}

std::optional<int> parse_ranking(std::string_view text)
{
    const auto content = last_tag_content(text, ranking_tag());
    if (!content)
        return std::nullopt;
    const auto value = trim(*content);
    if (value == "1")
        return 1;
    if (value == "2")
        return 2;
    return std::nullopt;
}

std::string render_trajectory(const Trajectory& trajectory)
{
    std::string out;
    for (std::size_t i = 1; i < trajectory.turns.size(); ++i) {
        const auto& turn = trajectory.turns[i];
        out += "[";
        out += to_string(turn.role);
        if (turn.role == Role::tool) {
            out += " " + turn.tool_name;
            if (turn.tool_status == ToolStatus::error)
                out += " error";
        }
        out += "] ";
        out += turn.content;
        for (const auto& call : turn.tool_calls)
            out += "\n-> " + call.name + " " + call.arguments.dump();
        out += "\n";
    }
    out += "[final answer] ";
    out += trajectory.final_answer.value_or("(none)");
    return out;
}

JudgePrompt build_pointwise_prompt(std::string_view minimal_toolset, const TaskInstance& task, const Trajectory& trajectory,
                                   std::string_view templ)
{
    auto text = prompts::fill(templ.empty() ? prompts::pointwise_judge() : templ, "Standard Tool Schema", minimal_toolset);
    text = prompts::fill(text, "Task Description", task.prompt);
    text = prompts::fill(text, "Trajectory", render_trajectory(trajectory));
    auto [system, user] = split_template(text);
    return {std::move(system), std::move(user)};
}

JudgePrompt build_pairwise_prompt(std::string_view minimal_toolset, const TaskInstance& task, const Trajectory& first,
                                  const Trajectory& second, std::string_view templ)
{
    auto text = prompts::fill(templ.empty() ? prompts::pairwise_judge() : templ, "Standard Tool Schema", minimal_toolset);
    text = prompts::fill(text, "Task Description", task.prompt);
    text = prompts::fill(text, "Trajectory 1", render_trajectory(first));
    text = prompts::fill(text, "Trajectory 2", render_trajectory(second));
    auto [system, user] = split_template(text);
    return {std::move(system), std::move(user)};
}

std::string ModelJudge::judge(const JudgeRequest& request)
{
    Turn user;
    user.role = Role::user;
    user.content = request.prompt.user;
    ModelRequest model_request;
    model_request.system_prompt = request.prompt.system;
    model_request.history = std::span<const Turn>(&user, 1);
    model_request.sampling = {temperature_, request.seed};
    model_request.tools_enabled = false;
    return client_.complete(model_request).text;
}

OracleJudge::OracleJudge(Oracle oracle, double accuracy, bool inverted, double threshold)
    : oracle_(std::move(oracle)), accuracy_(accuracy), inverted_(inverted), threshold_(threshold)
{
    if (!oracle_)
        throw std::invalid_argument("oracle judge needs an oracle");
    if (!(accuracy_ >= 0.0 && accuracy_ <= 1.0))
        throw std::invalid_argument("judge accuracy must lie in [0, 1]");
}

bool OracleJudge::accurate(const JudgeRequest& request) const
{
    if (accuracy_ >= 1.0)
        return true;
    std::uint64_t seed = request.seed;
    for (auto i : request.indices)
        seed = mix_seed(seed, i + 1);
    if (request.task)
        seed = mix_seed(seed, fnv1a(request.task->id));
    std::mt19937_64 rng(seed);
    return unit_uniform(rng) < accuracy_;
}

std::string OracleJudge::judge(const JudgeRequest& request)
{
    const bool flip = inverted_ != !accurate(request);
    if (request.kind == JudgeRequest::Kind::pointwise) {
        if (request.trajectories.size() != 1)
            throw std::invalid_argument("point-wise judging takes one trajectory");
        bool ok = oracle_(*request.trajectories[0]) >= threshold_;
        if (flip)
            ok = !ok;
        return std::string("<judgment>") + (ok ? "Correct" : "Wrong") + "</judgment>";
    }
    if (request.trajectories.size() != 2)
        throw std::invalid_argument("pair-wise judging takes two trajectories");
    const bool first_ok = oracle_(*request.trajectories[0]) >= threshold_;
    const bool second_ok = oracle_(*request.trajectories[1]) >= threshold_;
    int preferred = (second_ok && !first_ok) ? 2 : 1;
    if (flip)
        preferred = 3 - preferred;
    return "<ranking>" + std::to_string(preferred) + "</ranking>";
}

} // namespace agentbench
