#include "agentbench/evaluators.hpp"
#include "agentbench/judge.hpp"
#include "agentbench/prompts.hpp"
#include "agentbench/scaling.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

using namespace agentbench;

namespace {

TaskInstance make_task(Json script, std::string evaluator = "exact_match", Json gold = Json{{"answer", "right"}})
{
    TaskInstance task;
    task.id = "task";
    task.domain = Domain::code;
    task.prompt = "Solve it.";
    task.evaluator = std::move(evaluator);
    task.gold = std::move(gold);
    task.script = std::move(script);
    return task;
}

EpisodeOutcome isolated_run(const TaskInstance& task, std::uint64_t seed)
{
    auto host = test_support::inproc_host();
    auto client = ScriptedClient::from_json(task.script);
    EpisodeOutcome out;
    out.trajectory = run_episode(task, *host, client, {}, seed);
    out.reward = evaluate_outcome(task, out.trajectory, host.get());
    host->shutdown();
    return out;
}

Trajectory answered(std::string answer, std::uint64_t seed = 0)
{
    Trajectory t;
    t.task_id = "task";
    t.seed = seed;
    Turn system;
    system.role = Role::system;
    t.turns.push_back(system);
    Turn reply;
    reply.role = Role::assistant;
    reply.content = answer;
    t.turns.push_back(reply);
    t.final_answer = std::move(answer);
    t.termination = Termination::answered;
    return t;
}

// Returns canned replies in order and records what it was asked.
class CannedJudge final : public JudgeClient {
public:
    explicit CannedJudge(std::vector<std::string> replies) : replies_(std::move(replies)) { }
    std::string judge(const JudgeRequest& request) override
    {
        requests.push_back(request.prompt);
        indices.emplace_back(request.indices.begin(), request.indices.end());
        const auto reply = replies_.at(next_++ % replies_.size());
        if (reply == "THROW")
            throw std::runtime_error("judge unavailable");
        return reply;
    }
    std::vector<JudgePrompt> requests;
    std::vector<std::vector<std::size_t>> indices;

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

double oracle_reward(const Trajectory& t)
{
    return t.final_answer == "right" ? 1.0 : 0.0;
}

} // namespace

// --- pass@K ----------------------------------------------------------------------

TEST(PassAtK, WorkedExamples)
{
    EXPECT_EQ(pass_at_k({{0, 0, 0, 0}, {0, 0, 0, 0}}, 1), 0.0);
    EXPECT_EQ(pass_at_k({{0, 0, 0, 0}, {0, 0, 0, 0}}, 4), 0.0);
    EXPECT_EQ(pass_at_k({{0, 1, 0, 0}}, 2), 1.0);
    EXPECT_EQ(pass_at_k({{0, 1, 0, 0}}, 1), 0.0);
    EXPECT_EQ(pass_at_k({{0.995}, {0.98}}, 1), 0.5);
    EXPECT_EQ(pass_at_k({{0.98}}, 1, 0.95), 1.0);
}

TEST(PassAtK, Errors)
{
    EXPECT_THROW(pass_at_k({{1, 0}}, 3), InvalidConfig);
    EXPECT_THROW(pass_at_k({{1, 0}}, 0), InvalidConfig);
    EXPECT_THROW(pass_at_k({}, 1), InvalidInput);
    EXPECT_THROW(pass_at_k({{1.5}}, 1), InvalidInput);
}

TEST(PassAtK, AgreesWithProductOracleAndIsMonotone)
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t tasks = 1 + rng() % 12;
        const std::size_t samples = 1 + rng() % 6;
        std::vector<std::vector<double>> m(tasks, std::vector<double>(samples));
        for (auto& row : m)
            for (auto& r : row)
                r = (rng() % 3 == 0) ? 1.0 : static_cast<double>(rng() % 100) / 100.0;
        double last = 0.0;
        for (std::size_t k = 1; k <= samples; ++k) {
            // Probability that not every one of the first k samples fails.
            double solved = 0.0;
            for (const auto& row : m) {
                double all_fail = 1.0;
                for (std::size_t i = 0; i < k; ++i)
                    all_fail *= row[i] >= 0.99 ? 0.0 : 1.0;
                solved += 1.0 - all_fail;
            }
            const double got = pass_at_k(m, static_cast<int>(k));
            EXPECT_DOUBLE_EQ(got, solved / static_cast<double>(tasks));
            EXPECT_GE(got, last);
            last = got;
        }
    }
}

// --- parallel --------------------------------------------------------------------

TEST(Parallel, SingleSampleEqualsOneEpisode)
{
    const auto task = make_task(Json::parse(R"({"answer":{"choices":["right","wrong"],"weights":[0.5,0.5]}})"));
    const std::uint64_t seed[] = {77};
    const auto out = run_parallel(task, isolated_run, 1, seed);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].trajectory, isolated_run(task, 77).trajectory);
}

TEST(Parallel, SeedsDetermineEachSample)
{
    const auto task = make_task(Json::parse(R"({"answer":{"choices":["right","wrong"],"weights":[0.5,0.5]}})"));
    const auto seeds = sample_seeds(5, task.id, 4);
    const auto serial = run_parallel(task, isolated_run, 4, seeds);
    const auto concurrent = run_parallel(task, isolated_run, 4, seeds, 4);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(serial[i].trajectory.seed, seeds[i]);
        EXPECT_EQ(serial[i].trajectory, isolated_run(task, seeds[i]).trajectory);
        EXPECT_EQ(serial[i].trajectory, concurrent[i].trajectory);
    }
}

TEST(Parallel, StatefulFixturesAreIsolated)
{
    // Every sample writes, then reads a key no other sample should see.
    const auto task = make_task(Json::parse(R"({"steps":[
        {"tool_calls":[{"name":"kv__list_keys","arguments":{}}]},
        {"tool_calls":[{"name":"kv__set","arguments":{"key":"shared","value":"x"}}]}],"answer":"ok"})"));
    const auto seeds = sample_seeds(1, task.id, 3);
    const auto out = run_parallel(task, isolated_run, 3, seeds);
    for (const auto& o : out)
        EXPECT_EQ(o.trajectory.turns[3].content, "[]");
}

TEST(Parallel, ConfigErrors)
{
    const auto task = make_task(Json{{"answer", "right"}});
    const std::vector<std::uint64_t> dup{1, 1};
    const std::vector<std::uint64_t> one{1};
    EXPECT_THROW(run_parallel(task, isolated_run, 0, {}), InvalidConfig);
    EXPECT_THROW(run_parallel(task, isolated_run, 2, dup), InvalidConfig);
    EXPECT_THROW(run_parallel(task, isolated_run, 2, one), InvalidConfig);
    const auto seeds = sample_seeds(3, "x", 16);
    EXPECT_EQ(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size(), 16u);
}

// --- parsing ---------------------------------------------------------------------

TEST(Parsing, GoldenFile)
{
    std::ifstream in(test_support::source_dir() / "tests/data/judge_golden.jsonl");
    std::string line;
    int cases = 0;
    while (std::getline(in, line)) {
        const auto c = Json::parse(line);
        const auto text = c["text"].get<std::string>();
        const auto expected = c["expected"].get<std::string>();
        if (c["kind"] == "judgment") {
            const auto j = parse_judgment(text);
            const std::string got = j.parse_status == ParseStatus::malformed ? "malformed" : std::string(to_string(*j.verdict));
            EXPECT_EQ(got, expected) << text;
            EXPECT_EQ(j.parse_status == ParseStatus::malformed, !j.verdict.has_value());
        } else {
            const auto r = parse_ranking(text);
            EXPECT_EQ(r ? std::to_string(*r) : "malformed", expected) << text;
        }
        ++cases;
    }
    EXPECT_GE(cases, 20);
}

// --- point-wise --------------------------------------------------------------------

TEST(Pointwise, SelectsFirstCorrect)
{
    const std::vector<Trajectory> ts{answered("a"), answered("b"), answered("c")};
    const ToolRegistry empty;
    const auto task = make_task(Json::object());
    const JudgeContext ctx{task, "", 0};
    CannedJudge judge({"<judgment>Wrong</judgment>", "<judgment>Correct</judgment>", "<judgment>Wrong</judgment>"});
    const auto sel = select_pointwise(ts, judge, ctx);
    EXPECT_EQ(sel.selected, 1u);
    EXPECT_EQ(judge.requests.size(), 3u);

    CannedJudge all_wrong({"<judgment>Wrong</judgment>"});
    EXPECT_EQ(select_pointwise(ts, all_wrong, ctx).selected, 0u);

    CannedJudge malformed({"no tag", "<judgment>Correct</judgment>"});
    const auto m = select_pointwise(ts, malformed, ctx);
    EXPECT_EQ(m.selected, 1u);
    EXPECT_EQ(m.judgments[0].parse_status, ParseStatus::malformed);
}

TEST(Pointwise, SingleTrajectoryIsAlwaysSelected)
{
    const std::vector<Trajectory> ts{answered("a")};
    const auto task = make_task(Json::object());
    CannedJudge judge({"<judgment>Wrong</judgment>"});
    EXPECT_EQ(select_pointwise(ts, judge, JudgeContext{task, "", 0}).selected, 0u);
}

TEST(Pointwise, JudgeFailureCountsAsWrong)
{
    const std::vector<Trajectory> ts{answered("a"), answered("b")};
    const auto task = make_task(Json::object());
    CannedJudge judge({"THROW", "THROW", "<judgment>Correct</judgment>"});
    const auto sel = select_pointwise(ts, judge, JudgeContext{task, "", 0});
    EXPECT_TRUE(sel.judgments[0].judge_failed);
    EXPECT_FALSE(sel.judgments[0].correct());
    EXPECT_EQ(sel.selected, 1u);
    EXPECT_EQ(judge.requests.size(), 3u);

    CannedJudge flaky({"THROW", "<judgment>Correct</judgment>"});
    const auto retried = select_pointwise(std::span(ts).first(1), flaky, JudgeContext{task, "", 0});
    EXPECT_FALSE(retried.judgments[0].judge_failed);
    EXPECT_TRUE(retried.judgments[0].correct());
}

TEST(Pointwise, PromptCarriesToolsTaskAndTrajectory)
{
    const std::vector<Trajectory> ts{answered("forty-two")};
    const auto task = make_task(Json::object());
    CannedJudge judge({"<judgment>Correct</judgment>"});
    select_pointwise(ts, judge, JudgeContext{task, "calc__add(a, b): Add two numbers\n", 0});
    const auto& p = judge.requests.at(0);
    EXPECT_EQ(p.system.find("## Available Tools"), std::string::npos);
    EXPECT_NE(p.system.find("<judgment>"), std::string::npos);
    EXPECT_TRUE(p.user.starts_with("## Available Tools"));
    EXPECT_NE(p.user.find("calc__add(a, b): Add two numbers"), std::string::npos);
    EXPECT_NE(p.user.find("## Task Description: Solve it."), std::string::npos);
    EXPECT_NE(p.user.find("forty-two"), std::string::npos);
    EXPECT_EQ(p.user.find("{{"), std::string::npos);
}

TEST(Alignment, Definition)
{
    const auto c = parse_judgment("<judgment>Correct</judgment>");
    const auto w = parse_judgment("<judgment>Wrong</judgment>");
    const std::vector<Judgment> cc{c, c};
    const std::vector<double> ones{1, 1};
    EXPECT_EQ(pointwise_alignment(cc, ones), 1.0);
    const std::vector<Judgment> ccw{c, c, w};
    const std::vector<double> oracle{1, 0, 1};
    EXPECT_EQ(pointwise_alignment(ccw, oracle), 0.5);
    const std::vector<double> zeros{0, 0, 0};
    EXPECT_FALSE(pointwise_alignment(ccw, zeros));
    EXPECT_THROW(pointwise_alignment(cc, oracle), InvalidInput);
}

TEST(Alignment, OracleAndInvertedJudges)
{
    std::mt19937_64 rng(8);
    const auto task = make_task(Json::object());
    for (int batch = 0; batch < 50; ++batch) {
        std::vector<Trajectory> ts;
        std::vector<double> rewards;
        for (int i = 0; i < 4; ++i) {
            const bool ok = rng() % 2 == 0;
            ts.push_back(answered(ok ? "right" : "wrong", static_cast<std::uint64_t>(i)));
            rewards.push_back(ok ? 1.0 : 0.0);
        }
        OracleJudge oracle(oracle_reward);
        OracleJudge inverted(oracle_reward, 1.0, true);
        const auto a = pointwise_alignment(select_pointwise(ts, oracle, {task, "", 0}).judgments, rewards);
        const auto b = pointwise_alignment(select_pointwise(ts, inverted, {task, "", 0}).judgments, rewards);
        const bool any = std::find(rewards.begin(), rewards.end(), 1.0) != rewards.end();
        EXPECT_EQ(a.has_value(), any);
        if (any) {
            EXPECT_EQ(*a, 1.0);
            EXPECT_EQ(*b, 0.0);
        }
    }
}

// --- pair-wise ---------------------------------------------------------------------

TEST(Pairwise, ExhaustiveOptimalityWithOracleJudge)
{
    const auto task = make_task(Json::object());
    for (int k = 1; k <= 4; ++k) {
        for (int mask = 0; mask < (1 << k); ++mask) {
            std::vector<Trajectory> ts;
            for (int i = 0; i < k; ++i)
                ts.push_back(answered((mask >> i) & 1 ? "right" : "wrong", static_cast<std::uint64_t>(i)));
            OracleJudge judge(oracle_reward);
            const auto sel = select_pairwise(ts, judge, {task, "", 0});
            EXPECT_EQ(sel.comparisons.size(), static_cast<std::size_t>(k - 1));
            EXPECT_EQ(oracle_reward(ts[sel.selected]) == 1.0, mask != 0) << "k=" << k << " mask=" << mask;
        }
    }
}

TEST(Pairwise, ChampionPresentedFirstAndMalformedKeepsIt)
{
    const std::vector<Trajectory> ts{answered("a"), answered("b"), answered("c"), answered("d")};
    const auto task = make_task(Json::object());
    CannedJudge judge({"<ranking>2</ranking>", "garbage", "THROW", "THROW"});
    const auto sel = select_pairwise(ts, judge, {task, "", 0});
    ASSERT_EQ(sel.comparisons.size(), 3u);
    EXPECT_EQ(sel.comparisons[0].winner, 2);
    EXPECT_FALSE(sel.comparisons[1].winner);
    EXPECT_TRUE(sel.comparisons[2].judge_failed);
    EXPECT_EQ(sel.selected, 1u);
    EXPECT_EQ(judge.indices[0], (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(judge.indices[1], (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(judge.indices[2], (std::vector<std::size_t>{1, 3}));
    const auto& prompt = judge.requests[1].user;
    EXPECT_LT(prompt.find("## Trajectory 1:"), prompt.find("[final answer] b"));
    EXPECT_LT(prompt.find("[final answer] b"), prompt.find("## Trajectory 2:"));
    EXPECT_NE(prompt.find("[final answer] c"), std::string::npos);
}

TEST(Pairwise, SingleTrajectoryNeedsNoComparison)
{
    const std::vector<Trajectory> ts{answered("a")};
    const auto task = make_task(Json::object());
    CannedJudge judge({"<ranking>2</ranking>"});
    const auto sel = select_pairwise(ts, judge, {task, "", 0});
    EXPECT_EQ(sel.selected, 0u);
    EXPECT_TRUE(sel.comparisons.empty());
    EXPECT_TRUE(judge.requests.empty());
}

TEST(SelfChoice, NeverBeatsPassAtK)
{
    std::mt19937_64 rng(99);
    const auto task = make_task(Json::object());
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Trajectory> ts;
        std::vector<double> rewards;
        for (int i = 0; i < 4; ++i) {
            const bool ok = rng() % 3 == 0;
            ts.push_back(answered(ok ? "right" : "wrong", static_cast<std::uint64_t>(i)));
            rewards.push_back(ok ? 1.0 : 0.0);
        }
        OracleJudge noisy(oracle_reward, 0.6);
        const JudgeContext ctx{task, "", static_cast<std::uint64_t>(trial)};
        const auto pass = pass_at_k({rewards}, 4);
        EXPECT_LE(rewards[select_pointwise(ts, noisy, ctx).selected], pass);
        EXPECT_LE(rewards[select_pairwise(ts, noisy, ctx).selected], pass);
    }
}

TEST(SelfChoice, PrefixReplayMatchesRerun)
{
    std::mt19937_64 rng(5);
    const auto task = make_task(Json::object());
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Trajectory> ts;
        for (int i = 0; i < 4; ++i)
            ts.push_back(answered(rng() % 2 ? "right" : "wrong", static_cast<std::uint64_t>(i)));
        OracleJudge judge(oracle_reward, 0.7);
        const JudgeContext ctx{task, "", static_cast<std::uint64_t>(trial)};
        const auto point = select_pointwise(ts, judge, ctx);
        const auto pair = select_pairwise(ts, judge, ctx);
        for (int k = 1; k <= 4; ++k) {
            const auto prefix = std::span(ts).first(static_cast<std::size_t>(k));
            EXPECT_EQ(pointwise_selected_at(point, k), select_pointwise(prefix, judge, ctx).selected);
            EXPECT_EQ(pairwise_selected_at(pair, k), select_pairwise(prefix, judge, ctx).selected);
        }
    }
}

TEST(Records, RoundTrip)
{
    const std::vector<Trajectory> ts{answered("wrong", 0), answered("right", 1), answered("wrong", 2)};
    const auto task = make_task(Json::object());
    OracleJudge judge(oracle_reward);
    ParallelRecord r;
    r.task_id = "t";
    r.domain = Domain::search;
    r.rewards = {0, 1, 0};
    r.seeds = {4, 5, 6};
    r.pointwise = select_pointwise(ts, judge, {task, "", 0});
    r.pairwise = select_pairwise(ts, judge, {task, "", 0});
    const auto back = ParallelRecord::from_json(r.to_json());
    EXPECT_EQ(back.to_json(), r.to_json());
    EXPECT_EQ(back.pairwise->selected, 1u);

    SequentialRecord s{"t", Domain::code, 3, {{1000, 900, 0.0, true, 0}, {2000, 1800, 1.0, true, 1}}};
    EXPECT_EQ(SequentialRecord::from_json(s.to_json()).to_json(), s.to_json());
    auto bad = s.to_json();
    bad["snapshots"][0]["context_at_eval"] = 5000;
    EXPECT_THROW(SequentialRecord::from_json(bad), std::invalid_argument);
}

// --- sequential --------------------------------------------------------------------

namespace {

struct SequentialRun {
    std::vector<SequentialSnapshot> snapshots;
    std::vector<std::int64_t> answer_contexts;
};

const Json kLateScript = Json::parse(
    R"({"steps":[{"tool_calls":[{"name":"calc__add","arguments":{"a":1,"b":2}}]}],"answers_by_round":["wrong","wrong","wrong","right"]})");

// Plays the episode by hand to learn where each answer lands.
std::vector<std::int64_t> answer_contexts(const TaskInstance& task, int rounds)
{
    auto host = test_support::inproc_host();
    Episode episode(task, host, std::make_shared<ScriptedClient>(ScriptedClient::from_json(task.script)), {}, 1);
    std::vector<std::int64_t> out;
    for (int r = 0; r < rounds; ++r) {
        if (r > 0)
            episode.inject_continuation();
        out.push_back(episode.run().context());
    }
    return out;
}

std::vector<SequentialSnapshot> sequential(const TaskInstance& task, std::vector<std::int64_t> grid, int max_injections = 16)
{
    auto host = test_support::inproc_host();
    Episode episode(task, host, std::make_shared<ScriptedClient>(ScriptedClient::from_json(task.script)), {}, 1);
    return run_sequential(
        episode, grid, [&task](Episode& e) { return evaluate_outcome(task, e.trajectory(), &e.host()); }, max_injections);
}

} // namespace

TEST(Sequential, FlipsOnceAtPredictedCheckpoint)
{
    const auto task = make_task(kLateScript);
    const auto contexts = answer_contexts(task, 4);
    // Checkpoints placed between consecutive answers, plus one far out.
    std::vector<std::int64_t> grid;
    for (auto c : contexts)
        grid.push_back(c + 1);
    grid.push_back(contexts.back() + 10'000);
    const auto snaps = sequential(task, grid);
    ASSERT_EQ(snaps.size(), grid.size());
    int flips = 0;
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        EXPECT_LE(snaps[i].context_at_eval, snaps[i].checkpoint);
        if (i > 0) {
            EXPECT_GE(snaps[i].context_at_eval, snaps[i - 1].context_at_eval);
            flips += snaps[i].reward != snaps[i - 1].reward ? 1 : 0;
        }
    }
    EXPECT_EQ(flips, 1);
    EXPECT_EQ(snaps[2].reward, 0.0);
    EXPECT_EQ(snaps[3].reward, 1.0);
    EXPECT_EQ(snaps[3].round, 3);
    EXPECT_EQ(snaps[3].context_at_eval, contexts[3]);
}

TEST(Sequential, NoInjectionsNoFlip)
{
    const auto task = make_task(kLateScript);
    const auto snaps = sequential(task, {1'000, 4'000, 16'000, 64'000}, 0);
    for (const auto& s : snaps)
        EXPECT_EQ(s.reward, 0.0);
}

TEST(Sequential, CheckpointBeforeFirstAnswerIsUnanswered)
{
    const auto task = make_task(kLateScript);
    const auto snaps = sequential(task, {10, 100'000});
    EXPECT_FALSE(snaps[0].answered);
    EXPECT_EQ(snaps[0].context_at_eval, 0);
    EXPECT_TRUE(snaps[1].answered);
    EXPECT_EQ(snaps[1].reward, 1.0);
}

TEST(Sequential, GridValidation)
{
    const auto task = make_task(kLateScript);
    EXPECT_THROW(sequential(task, {8'000, 4'000}), InvalidConfig);
    EXPECT_THROW(sequential(task, {}), InvalidConfig);
    EXPECT_THROW(sequential(task, {0, 10}), InvalidConfig);
    const auto grid = default_checkpoint_grid();
    EXPECT_EQ(grid.back(), 196'000);
    EXPECT_NO_THROW(validate_grid(grid));
}

// --- inherent context --------------------------------------------------------------

TEST(InherentContext, Statistics)
{
    auto t1 = answered("x");
    t1.turns.back().context = 80'000;
    auto t2 = answered("y");
    t2.turns.back().context = 120'000;
    const std::vector<Trajectory> one{t1};
    EXPECT_EQ(inherent_context(one).mean, 80'000);
    const std::vector<Trajectory> two{t1, t2};
    EXPECT_EQ(inherent_context(two).mean, 100'000);
    EXPECT_EQ(inherent_context(two).median, 100'000);
    EXPECT_EQ(context_stats({1, 2, 100}).median, 2);
    EXPECT_THROW(inherent_context(std::vector<Trajectory>{}), InvalidInput);
    auto extended = t1;
    inject_continuation(extended, "go on");
    EXPECT_THROW(inherent_context(std::vector<Trajectory>{extended}), InvalidInput);
}
