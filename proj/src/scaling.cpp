#include "agentbench/scaling.hpp"

#include "agentbench/text.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

namespace agentbench {

void validate_grid(std::span<const std::int64_t> grid)
{
    if (grid.empty())
        throw InvalidConfig("checkpoint grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] <= 0)
            throw InvalidConfig("checkpoint grid values must be positive");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw InvalidConfig("checkpoint grid must be strictly ascending (" + std::to_string(grid[i - 1]) + " then "
                                + std::to_string(grid[i]) + ")");
    }
}

void ScalingConfig::validate() const
{
    if (k < 1)
        throw InvalidConfig("K must be at least 1");
    if (!checkpoint_grid.empty())
        validate_grid(checkpoint_grid);
    if (!(success_threshold > 0.0 && success_threshold <= 1.0))
        throw InvalidConfig("success threshold must lie in (0, 1]");
    if (max_injections < 0)
        throw InvalidConfig("max_injections must be non-negative");
    if (!(judge_temperature >= 0.0))
        throw InvalidConfig("judge temperature must be non-negative");
}

std::vector<std::int64_t> default_checkpoint_grid(std::int64_t limit)
{
    if (limit <= 0)
        throw InvalidConfig("grid limit must be positive");
    std::vector<std::int64_t> grid;
    for (std::int64_t c = 8'000; c < limit; c *= 2)
        grid.push_back(c);
    grid.push_back(limit);
    return grid;
}

// --- parallel ------------------------------------------------------------------

std::vector<std::uint64_t> sample_seeds(std::uint64_t run_seed, std::string_view task_id, int k)
{
    if (k < 1)
        throw InvalidConfig("K must be at least 1");
    const auto base = mix_seed(run_seed, fnv1a(task_id));
    std::vector<std::uint64_t> seeds;
    std::set<std::uint64_t> seen;
    for (std::uint64_t stream = 0; seeds.size() < static_cast<std::size_t>(k); ++stream) {
        const auto s = mix_seed(base, stream);
        if (seen.insert(s).second)
            seeds.push_back(s);
    }
    return seeds;
}

std::vector<EpisodeOutcome> run_parallel(const TaskInstance& task, const EpisodeRunner& runner, int k,
                                         std::span<const std::uint64_t> seeds, int workers)
{
    if (k < 1)
        throw InvalidConfig("K must be at least 1");
    if (seeds.size() != static_cast<std::size_t>(k))
        throw InvalidConfig("expected " + std::to_string(k) + " seeds, got " + std::to_string(seeds.size()));
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw InvalidConfig("sample seeds must be distinct");
    if (!runner)
        throw InvalidConfig("no episode runner");

    std::vector<EpisodeOutcome> out(seeds.size());
    const std::size_t batch = static_cast<std::size_t>(std::max(1, workers));
    for (std::size_t start = 0; start < seeds.size(); start += batch) {
        const std::size_t end = std::min(seeds.size(), start + batch);
        if (end - start == 1) {
            out[start] = runner(task, seeds[start]);
            continue;
        }
        std::vector<std::future<EpisodeOutcome>> pending;
        for (std::size_t i = start; i < end; ++i)
            pending.push_back(std::async(std::launch::async, [&runner, &task, seed = seeds[i]] { return runner(task, seed); }));
        for (std::size_t i = start; i < end; ++i)
            out[i] = pending[i - start].get();
    }
    return out;
}

double pass_at_k(const std::vector<std::vector<double>>& rewards, int k, double threshold)
{
    if (k < 1)
        throw InvalidConfig("K must be at least 1");
    if (rewards.empty())
        throw InvalidInput("pass@K of an empty reward matrix");
    std::size_t solved = 0;
    for (std::size_t task = 0; task < rewards.size(); ++task) {
        const auto& row = rewards[task];
        if (row.size() < static_cast<std::size_t>(k))
            throw InvalidConfig("task " + std::to_string(task) + " has " + std::to_string(row.size())
                                + " samples, fewer than K=" + std::to_string(k));
        bool hit = false;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!(row[i] >= 0.0 && row[i] <= 1.0))
                throw InvalidInput("reward outside [0, 1] in task " + std::to_string(task));
            if (i < static_cast<std::size_t>(k) && row[i] >= threshold)
                hit = true;
        }
        solved += hit ? 1 : 0;
    }
    return static_cast<double>(solved) / static_cast<double>(rewards.size());
}

// --- self-choice -----------------------------------------------------------------

PointwiseSelection select_pointwise(std::span<const Trajectory> trajectories, JudgeClient& judge, const JudgeContext& ctx)
{
    if (trajectories.empty())
        throw InvalidInput("point-wise selection needs at least one trajectory");
    PointwiseSelection out;
    bool found = false;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const Trajectory* single[] = {&trajectories[i]};
        const std::size_t index[] = {i};
        JudgeRequest request;
        request.kind = JudgeRequest::Kind::pointwise;
        request.prompt = build_pointwise_prompt(ctx.minimal_toolset, ctx.task, trajectories[i]);
        request.task = &ctx.task;
        request.trajectories = single;
        request.indices = index;
        request.seed = ctx.seed;

        Judgment judgment;
        std::string failure;
        bool answered = false;
        for (int attempt = 0; attempt < 2 && !answered; ++attempt) {
            try {
                judgment = parse_judgment(judge.judge(request));
                answered = true;
            } catch (const std::exception& e) {
                failure = e.what();
            }
        }
        if (!answered) {
            judgment = Judgment{};
            judgment.judge_failed = true;
            judgment.diagnostic = "JudgeFailure: " + failure;
        }
        if (!found && judgment.correct()) {
            out.selected = i;
            found = true;
        }
        out.judgments.push_back(std::move(judgment));
    }
    return out;
}

PairwiseSelection select_pairwise(std::span<const Trajectory> trajectories, JudgeClient& judge, const JudgeContext& ctx)
{
    if (trajectories.empty())
        throw InvalidInput("pair-wise selection needs at least one trajectory");
    PairwiseSelection out;
    std::size_t champion = 0;
    for (std::size_t challenger = 1; challenger < trajectories.size(); ++challenger) {
        const Trajectory* pair[] = {&trajectories[champion], &trajectories[challenger]};
        const std::size_t index[] = {champion, challenger};
        JudgeRequest request;
        request.kind = JudgeRequest::Kind::pairwise;
        request.prompt = build_pairwise_prompt(ctx.minimal_toolset, ctx.task, trajectories[champion], trajectories[challenger]);
        request.task = &ctx.task;
        request.trajectories = pair;
        request.indices = index;
        request.seed = ctx.seed;

        Comparison comparison{champion, challenger, std::nullopt, {}, false};
        bool answered = false;
        for (int attempt = 0; attempt < 2 && !answered; ++attempt) {
            try {
                comparison.raw_text = judge.judge(request);
                answered = true;
            } catch (const std::exception& e) {
                comparison.raw_text = std::string("JudgeFailure: ") + e.what();
            }
        }
        comparison.judge_failed = !answered;
        if (answered)
            comparison.winner = parse_ranking(comparison.raw_text);
        if (comparison.winner == 2)
            champion = challenger;
        out.comparisons.push_back(std::move(comparison));
    }
    out.selected = champion;
    return out;
}

std::optional<double> pointwise_alignment(std::span<const Judgment> judgments, std::span<const double> oracle_rewards,
                                          double threshold)
{
    AlignmentTally tally;
    tally.add(judgments, oracle_rewards, threshold);
    return tally.value();
}

void AlignmentTally::add(std::span<const Judgment> judgments, std::span<const double> oracle_rewards, double threshold)
{
    if (judgments.size() != oracle_rewards.size())
        throw InvalidInput("alignment needs one judgment per oracle reward (" + std::to_string(judgments.size()) + " vs "
                           + std::to_string(oracle_rewards.size()) + ")");
    for (std::size_t i = 0; i < judgments.size(); ++i) {
        if (oracle_rewards[i] >= threshold) {
            ++oracle_correct;
            judged_correct += judgments[i].correct() ? 1 : 0;
        }
    }
}

std::optional<double> AlignmentTally::value() const
{
    if (oracle_correct == 0)
        return std::nullopt;
    return static_cast<double>(judged_correct) / static_cast<double>(oracle_correct);
}

std::size_t pointwise_selected_at(const PointwiseSelection& selection, int k)
{
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), selection.judgments.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (selection.judgments[i].correct())
            return i;
    }
    return 0;
}

std::size_t pairwise_selected_at(const PairwiseSelection& selection, int k)
{
    std::size_t champion = 0;
    for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(std::max(k, 1)) && i < selection.comparisons.size(); ++i) {
        const auto& c = selection.comparisons[i];
        if (c.winner == 2)
            champion = c.right;
    }
    return champion;
}

// --- sequential ------------------------------------------------------------------

std::vector<SequentialSnapshot> run_sequential(Episode& episode, std::span<const std::int64_t> grid,
                                               const SequentialEvaluator& evaluate, int max_injections)
{
    validate_grid(grid);
    if (max_injections < 0)
        throw InvalidConfig("max_injections must be non-negative");

    struct Answer {
        std::int64_t context;
        double reward;
        int round;
    };
    std::vector<Answer> answers;
    int injections = 0;
    while (true) {
        const auto& t = episode.run();
        const bool gave_answer = t.final_answer
            && (t.termination == Termination::answered || t.termination == Termination::budget_forced);
        if (gave_answer)
            answers.push_back({t.context(), evaluate(episode), injections});
        if (t.termination != Termination::answered || t.context() >= grid.back() || injections >= max_injections)
            break;
        episode.inject_continuation();
        ++injections;
    }

    std::vector<SequentialSnapshot> out;
    for (const auto checkpoint : grid) {
        SequentialSnapshot snap;
        snap.checkpoint = checkpoint;
        for (const auto& a : answers) {
            if (a.context > checkpoint)
                break;
            snap.context_at_eval = a.context;
            snap.reward = a.reward;
            snap.answered = true;
            snap.round = a.round;
        }
        out.push_back(snap);
    }
    return out;
}

// --- inherent context ----------------------------------------------------------

ContextStats context_stats(std::vector<std::int64_t> contexts)
{
    if (contexts.empty())
        throw InvalidInput("context statistics of an empty batch");
    std::sort(contexts.begin(), contexts.end());
    ContextStats stats;
    stats.count = contexts.size();
    double sum = 0.0;
    for (auto c : contexts)
        sum += static_cast<double>(c);
    stats.mean = sum / static_cast<double>(contexts.size());
    const auto mid = contexts.size() / 2;
    stats.median = contexts.size() % 2 == 1 ? static_cast<double>(contexts[mid])
                                            : (static_cast<double>(contexts[mid - 1]) + static_cast<double>(contexts[mid])) / 2.0;
    return stats;
}

ContextStats inherent_context(std::span<const Trajectory> trajectories)
{
    std::vector<std::int64_t> contexts;
    for (const auto& t : trajectories) {
        if (t.count(Role::continuation) > 0 || t.forced_final_prompts > 0)
            throw InvalidInput("trajectory '" + t.task_id + "' was extended or forced; inherent context needs natural runs");
        contexts.push_back(t.context());
    }
    return context_stats(std::move(contexts));
}

// --- results file --------------------------------------------------------------

Json ParallelRecord::to_json() const
{
    Json out = Json::object();
    out["task_id"] = task_id;
    out["domain"] = to_string(domain);
    out["mode"] = "parallel";
    out["k"] = rewards.size();
    out["rewards"] = rewards;
    out["seeds"] = seeds;
    if (pointwise) {
        Json verdicts = Json::array();
        for (const auto& j : pointwise->judgments) {
            if (j.judge_failed)
                verdicts.push_back("failed");
            else if (j.parse_status == ParseStatus::malformed)
                verdicts.push_back("malformed");
            else
                verdicts.push_back(to_string(*j.verdict));
        }
        out["pointwise"] = Json{{"selected", pointwise->selected}, {"verdicts", verdicts}};
    }
    if (pairwise) {
        Json comparisons = Json::array();
        for (const auto& c : pairwise->comparisons) {
            comparisons.push_back(Json{{"left", c.left},
                                       {"right", c.right},
                                       {"winner", c.winner ? Json(*c.winner) : Json()},
                                       {"judge_failed", c.judge_failed}});
        }
        out["pairwise"] = Json{{"selected", pairwise->selected}, {"comparisons", comparisons}};
    }
    return out;
}

ParallelRecord ParallelRecord::from_json(const Json& record)
{
    ParallelRecord out;
    out.task_id = record.at("task_id").get<std::string>();
    out.domain = domain_from_string(record.at("domain").get<std::string>());
    out.rewards = record.at("rewards").get<std::vector<double>>();
    out.seeds = record.value("seeds", std::vector<std::uint64_t>{});
    if (out.rewards.empty())
        throw std::invalid_argument("parallel record without rewards");
    for (double r : out.rewards) {
        if (!(r >= 0.0 && r <= 1.0))
            throw std::invalid_argument("reward outside [0, 1]");
    }
    if (auto pw = record.find("pointwise"); pw != record.end()) {
        PointwiseSelection sel;
        sel.selected = pw->at("selected").get<std::size_t>();
        for (const auto& v : pw->at("verdicts")) {
            Judgment j;
            const auto text = v.get<std::string>();
            if (text == "Correct" || text == "Wrong") {
                j.verdict = text == "Correct" ? Verdict::correct : Verdict::wrong;
                j.parse_status = ParseStatus::ok;
            } else {
                j.judge_failed = text == "failed";
            }
            sel.judgments.push_back(std::move(j));
        }
        if (sel.judgments.size() != out.rewards.size() || sel.selected >= out.rewards.size())
            throw std::invalid_argument("point-wise verdicts do not match the samples");
        out.pointwise = std::move(sel);
    }
    if (auto pw = record.find("pairwise"); pw != record.end()) {
        PairwiseSelection sel;
        sel.selected = pw->at("selected").get<std::size_t>();
        for (const auto& c : pw->at("comparisons")) {
            Comparison cmp;
            cmp.left = c.at("left").get<std::size_t>();
            cmp.right = c.at("right").get<std::size_t>();
            if (!c.at("winner").is_null())
                cmp.winner = c.at("winner").get<int>();
            cmp.judge_failed = c.value("judge_failed", false);
            sel.comparisons.push_back(cmp);
        }
        if (sel.comparisons.size() + 1 != out.rewards.size() || sel.selected >= out.rewards.size())
            throw std::invalid_argument("pair-wise comparisons do not match the samples");
        out.pairwise = std::move(sel);
    }
    return out;
}

Json SequentialRecord::to_json() const
{
    Json snaps = Json::array();
    for (const auto& s : snapshots) {
        snaps.push_back(Json{{"checkpoint", s.checkpoint},
                             {"context_at_eval", s.context_at_eval},
                             {"reward", s.reward},
                             {"answered", s.answered},
                             {"round", s.round}});
    }
    return Json{{"task_id", task_id}, {"domain", to_string(domain)}, {"mode", "sequential"}, {"seed", seed}, {"snapshots", snaps}};
}

SequentialRecord SequentialRecord::from_json(const Json& record)
{
    SequentialRecord out;
    out.task_id = record.at("task_id").get<std::string>();
    out.domain = domain_from_string(record.at("domain").get<std::string>());
    out.seed = record.value("seed", std::uint64_t{0});
    for (const auto& s : record.at("snapshots")) {
        SequentialSnapshot snap;
        snap.checkpoint = s.at("checkpoint").get<std::int64_t>();
        snap.context_at_eval = s.at("context_at_eval").get<std::int64_t>();
        snap.reward = s.at("reward").get<double>();
        snap.answered = s.value("answered", true);
        snap.round = s.value("round", 0);
        if (!(snap.reward >= 0.0 && snap.reward <= 1.0))
            throw std::invalid_argument("reward outside [0, 1]");
        if (snap.context_at_eval > snap.checkpoint)
            throw std::invalid_argument("context_at_eval exceeds its checkpoint");
        out.snapshots.push_back(snap);
    }
    if (out.snapshots.empty())
        throw std::invalid_argument("sequential record without snapshots");
    return out;
}

} // namespace agentbench
