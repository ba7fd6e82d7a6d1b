#include "agentbench/cli.hpp"

#include "agentbench/cost.hpp"
#include "agentbench/evaluators.hpp"
#include "agentbench/host.hpp"
#include "agentbench/judge.hpp"
#include "agentbench/manifest.hpp"
#include "agentbench/prompts.hpp"
#include "agentbench/report.hpp"
#include "agentbench/runtime.hpp"
#include "agentbench/scaling.hpp"
#include "agentbench/text.hpp"

#include <charconv>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <sstream>

namespace agentbench {

namespace fs = std::filesystem;

std::string_view to_string(RunMode mode)
{
    switch (mode) {
    case RunMode::single:
        return "single";
    case RunMode::parallel:
        return "parallel";
    case RunMode::sequential:
        return "sequential";
    }
    return "single";
}

RunMode run_mode_from_string(std::string_view text)
{
    for (RunMode m : {RunMode::single, RunMode::parallel, RunMode::sequential}) {
        if (to_string(m) == text)
            return m;
    }
    throw InvalidConfig("unknown mode '" + std::string(text) + "' (single, parallel, sequential)");
}

std::vector<std::int64_t> parse_grid(std::string_view text)
{
    std::vector<std::int64_t> grid;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        auto cell = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        std::int64_t scale = 1;
        if (!cell.empty() && (cell.back() == 'k' || cell.back() == 'K')) {
            scale = 1000;
            cell.remove_suffix(1);
        }
        std::int64_t value = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
        if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size())
            throw InvalidConfig("bad checkpoint '" + std::string(cell) + "' in grid");
        grid.push_back(value * scale);
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    validate_grid(grid);
    return grid;
}

void RunConfig::validate() const
{
    auto require_file = [](const fs::path& path, const char* what) {
        if (path.empty())
            throw InvalidConfig(std::string("missing ") + what + " path");
        if (!fs::is_regular_file(path))
            throw InvalidConfig(std::string(what) + " file not found: " + path.string());
    };
    require_file(servers, "server manifest");
    require_file(tasks, "task suite");
    if (!prices.empty())
        require_file(prices, "price sheet");
    if (out.empty())
        throw InvalidConfig("missing output directory");
    if (mode == RunMode::parallel && k < 1)
        throw InvalidConfig("parallel mode needs K >= 1");
    if (mode == RunMode::sequential && !grid.empty())
        validate_grid(grid);
    if (toolset_mode == ToolsetMode::compressed && compress_target == 0)
        throw InvalidConfig("--compress-tools needs a positive character target");
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw InvalidConfig("temperature must lie in [0, 2]");
    if (workers < 1)
        throw InvalidConfig("workers must be at least 1");
    if (max_turns < 1 || context_budget <= 0 || max_injections < 0)
        throw InvalidConfig("turn, budget and injection limits must be positive");
    if (!(judge_accuracy >= 0.0 && judge_accuracy <= 1.0))
        throw InvalidConfig("judge accuracy must lie in [0, 1]");
}

namespace {

struct TaskArtifacts {
    std::string trajectories;
    std::string scaling;
};

class Runner {
public:
    Runner(const RunConfig& config, std::vector<ServerManifest> manifests, std::string minimal_toolset)
        : config_(config), manifests_(std::move(manifests)), minimal_toolset_(std::move(minimal_toolset))
    {
        episode_.max_turns = config.max_turns;
        episode_.context_budget = config.context_budget;
        episode_.temperature = config.temperature;
        episode_.toolset_mode = config.toolset_mode;
        episode_.compress_target = config.compress_target;
        episode_.validate();
        grid_ = config.grid.empty() ? default_checkpoint_grid() : config.grid;
    }

    const std::vector<std::int64_t>& grid() const noexcept { return grid_; }
    const EpisodeConfig& episode_config() const noexcept { return episode_; }

    TaskArtifacts run(const TaskInstance& task) const
    {
        switch (config_.mode) {
        case RunMode::single:
            return run_samples(task, 1, false);
        case RunMode::parallel:
            return run_samples(task, config_.k, true);
        case RunMode::sequential:
            return run_sequential_task(task);
        }
        return {};
    }

private:
    std::shared_ptr<Host> connect() const
    {
        return std::shared_ptr<Host>(Host::broadcast_connect(manifests_));
    }

    std::shared_ptr<ModelClient> client_for(const TaskInstance& task) const
    {
        Json script = task.script;
        if (!script.contains("model"))
            script["model"] = config_.model;
        return std::make_shared<ScriptedClient>(ScriptedClient::from_json(script));
    }

    EpisodeOutcome run_one(const TaskInstance& task, std::uint64_t seed) const
    {
        auto host = connect();
        Episode episode(task, host, client_for(task), episode_, seed);
        EpisodeOutcome outcome;
        outcome.trajectory = episode.run();
        outcome.reward = evaluate_outcome(task, outcome.trajectory, host.get());
        host->shutdown();
        return outcome;
    }

    TaskArtifacts run_samples(const TaskInstance& task, int k, bool self_choice) const
    {
        const auto seeds = sample_seeds(config_.seed, task.id, k);
        const auto outcomes = run_parallel(
            task, [this](const TaskInstance& t, std::uint64_t seed) { return run_one(t, seed); }, k, seeds);

        TaskArtifacts out;
        std::ostringstream log;
        ParallelRecord record;
        record.task_id = task.id;
        record.domain = task.domain;
        record.seeds = seeds;
        std::vector<Trajectory> trajectories;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            write_trajectory_log(log, outcomes[i].trajectory, static_cast<int>(i));
            record.rewards.push_back(outcomes[i].reward);
            trajectories.push_back(outcomes[i].trajectory);
        }

        if (self_choice) {
            std::map<std::uint64_t, double> reward_by_seed;
            for (const auto& o : outcomes)
                reward_by_seed[o.trajectory.seed] = o.reward;
            OracleJudge judge([&reward_by_seed](const Trajectory& t) { return reward_by_seed.at(t.seed); },
                              config_.judge_accuracy);
            const JudgeContext ctx{task, minimal_toolset_, mix_seed(config_.seed, fnv1a("judge:" + task.id))};
            record.pointwise = select_pointwise(trajectories, judge, ctx);
            record.pairwise = select_pairwise(trajectories, judge, ctx);
        }
        out.trajectories = log.str();
        out.scaling = record.to_json().dump() + "\n";
        return out;
    }

    TaskArtifacts run_sequential_task(const TaskInstance& task) const
    {
        const auto seed = sample_seeds(config_.seed, task.id, 1).front();
        auto config = episode_;
        config.context_budget = std::min(config.context_budget, grid_.back());
        auto host = connect();
        Episode episode(task, host, client_for(task), config, seed);
        SequentialRecord record;
        record.task_id = task.id;
        record.domain = task.domain;
        record.seed = seed;
        record.snapshots = run_sequential(
            episode, grid_, [&task](Episode& e) { return evaluate_outcome(task, e.trajectory(), &e.host()); },
            config_.max_injections);
        host->shutdown();

        TaskArtifacts out;
        std::ostringstream log;
        write_trajectory_log(log, episode.trajectory(), 0);
        out.trajectories = log.str();
        out.scaling = record.to_json().dump() + "\n";
        return out;
    }

    const RunConfig& config_;
    std::vector<ServerManifest> manifests_;
    std::string minimal_toolset_;
    EpisodeConfig episode_;
    std::vector<std::int64_t> grid_;
};

void write_file(const fs::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out.flush())
        throw std::runtime_error("write failed: " + path.string());
}

Json manifest_json(const RunConfig& config, const Runner& runner, const ToolRegistry& registry, const HostReport& hosts,
                   std::size_t task_count)
{
    Json out = Json::object();
    out["servers"] = fs::absolute(config.servers).lexically_normal().string();
    out["tasks"] = fs::absolute(config.tasks).lexically_normal().string();
    out["prices"] = config.prices.empty() ? Json() : Json(fs::absolute(config.prices).lexically_normal().string());
    out["mode"] = to_string(config.mode);
    out["k"] = config.mode == RunMode::parallel ? config.k : 1;
    out["grid"] = config.mode == RunMode::sequential ? Json(runner.grid()) : Json();
    out["toolset_mode"] = to_string(config.toolset_mode);
    out["compress_target"] = config.compress_target;
    out["temperature"] = config.temperature;
    out["seed"] = config.seed;
    out["model"] = config.model;
    out["workers"] = config.workers;
    out["max_injections"] = config.max_injections;
    out["judge_accuracy"] = config.judge_accuracy;
    out["episode"] = runner.episode_config().to_json();
    out["task_count"] = task_count;
    out["tool_count"] = registry.size();
    Json skipped = Json::array();
    for (const auto& s : hosts.skipped)
        skipped.push_back(Json{{"server_id", s.server_id}, {"reason", s.reason}});
    out["skipped_servers"] = skipped;
    return out;
}

} // namespace

int cmd_run(const RunConfig& config, std::ostream& err)
{
    std::vector<ServerManifest> manifests;
    std::vector<TaskInstance> tasks;
    try {
        config.validate();
        manifests = load_manifests(config.servers);
        tasks = load_task_suite(config.tasks);
        if (tasks.empty())
            throw InvalidConfig("task suite is empty");
        check_bindings(tasks);
        if (!config.prices.empty())
            PriceSheet::load(config.prices);
    } catch (const std::exception& e) {
        err << "agentbench run: " << e.what() << '\n';
        return kExitBadConfig;
    }

    // Probe once for the registry, the judge toolset and the skip report.
    std::unique_ptr<Host> probe;
    try {
        probe = Host::broadcast_connect(manifests);
    } catch (const ConnectFailed& e) {
        err << "agentbench run: connect aborted: " << e.what() << '\n';
        return kExitConnectAbort;
    } catch (const std::exception& e) {
        err << "agentbench run: " << e.what() << '\n';
        return kExitConnectAbort;
    }
    for (const auto& s : probe->report().skipped)
        err << "agentbench run: skipped server '" << s.server_id << "': " << s.reason << '\n';
    const auto registry = probe->shared_registry();
    const HostReport host_report = probe->report();
    // Skipped servers stay skipped for the rest of the run.
    std::vector<ServerManifest> ready;
    for (const auto& m : manifests) {
        if (std::find(host_report.ready.begin(), host_report.ready.end(), m.server_id) != host_report.ready.end())
            ready.push_back(m);
    }
    probe->shutdown();
    probe.reset();

    try {
        const Runner runner(config, std::move(ready), render_minimal(*registry));
        fs::create_directories(config.out);

        std::vector<TaskArtifacts> artifacts(tasks.size());
        const std::size_t batch = static_cast<std::size_t>(config.workers);
        for (std::size_t start = 0; start < tasks.size(); start += batch) {
            const std::size_t end = std::min(tasks.size(), start + batch);
            std::vector<std::future<TaskArtifacts>> pending;
            for (std::size_t i = start; i < end; ++i)
                pending.push_back(std::async(batch == 1 ? std::launch::deferred : std::launch::async,
                                             [&runner, &task = tasks[i]] { return runner.run(task); }));
            for (std::size_t i = start; i < end; ++i)
                artifacts[i] = pending[i - start].get();
        }

        std::string trajectories;
        std::string scaling;
        for (const auto& a : artifacts) {
            trajectories += a.trajectories;
            scaling += a.scaling;
        }
        write_file(config.out / "trajectories.jsonl", trajectories);
        write_file(config.out / "scaling.jsonl", scaling);
        write_file(config.out / "run_manifest.json",
                   manifest_json(config, runner, *registry, host_report, tasks.size()).dump(2) + "\n");
    } catch (const ConnectFailed& e) {
        err << "agentbench run: connect aborted: " << e.what() << '\n';
        return kExitConnectAbort;
    } catch (const InvalidConfig& e) {
        err << "agentbench run: " << e.what() << '\n';
        return kExitBadConfig;
    } catch (const std::exception& e) {
        err << "agentbench run: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

// --- report ----------------------------------------------------------------------

namespace {

struct ScalingLog {
    std::vector<ParallelRecord> parallel;
    std::vector<SequentialRecord> sequential;
};

ScalingLog read_scaling_log(const fs::path& path)
{
    ScalingLog out;
    std::ifstream in(path);
    if (!in)
        return out;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (trim(line).empty())
            continue;
        try {
            const auto record = Json::parse(line);
            const auto mode = record.at("mode").get<std::string>();
            if (mode == "parallel")
                out.parallel.push_back(ParallelRecord::from_json(record));
            else if (mode == "sequential")
                out.sequential.push_back(SequentialRecord::from_json(record));
            else
                throw std::invalid_argument("unknown mode '" + mode + "'");
        } catch (const std::exception& e) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string pass_at_k_csv(const std::vector<ParallelRecord>& records)
{
    std::ostringstream out;
    out << "k,tasks,pass_at_k,pointwise_self_choice,pairwise_self_choice\n";
    if (records.empty())
        return out.str();
    std::size_t k_max = records.front().rewards.size();
    std::vector<std::vector<double>> matrix;
    for (const auto& r : records) {
        k_max = std::min(k_max, r.rewards.size());
        matrix.push_back(r.rewards);
    }
    const bool has_pointwise = std::all_of(records.begin(), records.end(), [](const auto& r) { return r.pointwise.has_value(); });
    const bool has_pairwise = std::all_of(records.begin(), records.end(), [](const auto& r) { return r.pairwise.has_value(); });
    for (std::size_t k = 1; k <= k_max; ++k) {
        const int ki = static_cast<int>(k);
        out << k << ',' << records.size() << ',' << format_fixed(pass_at_k(matrix, ki), 4) << ',';
        double point = 0.0;
        double pair = 0.0;
        for (const auto& r : records) {
            if (has_pointwise)
                point += r.rewards[pointwise_selected_at(*r.pointwise, ki)] >= kSuccessThreshold ? 1.0 : 0.0;
            if (has_pairwise)
                pair += r.rewards[pairwise_selected_at(*r.pairwise, ki)] >= kSuccessThreshold ? 1.0 : 0.0;
        }
        const auto n = static_cast<double>(records.size());
        out << (has_pointwise ? format_fixed(point / n, 4) : "") << ',' << (has_pairwise ? format_fixed(pair / n, 4) : "")
            << '\n';
    }
    return out.str();
}

std::string alignment_csv(const std::vector<ParallelRecord>& records)
{
    AlignmentTally tally;
    std::size_t malformed = 0;
    std::size_t comparisons = 0;
    std::size_t comparisons_kept = 0;
    for (const auto& r : records) {
        if (r.pointwise) {
            tally.add(r.pointwise->judgments, r.rewards);
            for (const auto& j : r.pointwise->judgments)
                malformed += j.parse_status == ParseStatus::malformed ? 1 : 0;
        }
        if (r.pairwise) {
            for (const auto& c : r.pairwise->comparisons) {
                ++comparisons;
                comparisons_kept += c.winner == 2 ? 0 : 1;
            }
        }
    }
    std::ostringstream out;
    out << "metric,value\n";
    const auto alignment = tally.value();
    out << "pointwise_alignment," << (alignment ? format_fixed(*alignment, 4) : "") << '\n';
    out << "oracle_correct_trajectories," << tally.oracle_correct << '\n';
    out << "judged_correct_among_oracle_correct," << tally.judged_correct << '\n';
    out << "malformed_judgments," << malformed << '\n';
    out << "pairwise_comparisons," << comparisons << '\n';
    out << "pairwise_champion_kept," << comparisons_kept << '\n';
    return out.str();
}

std::string sequential_csv(const std::vector<SequentialRecord>& records)
{
    std::ostringstream out;
    out << "checkpoint,tasks,mean_reward,answered,mean_context_at_eval\n";
    std::map<std::int64_t, std::vector<const SequentialSnapshot*>> by_checkpoint;
    for (const auto& r : records) {
        for (const auto& s : r.snapshots)
            by_checkpoint[s.checkpoint].push_back(&s);
    }
    for (const auto& [checkpoint, snaps] : by_checkpoint) {
        double reward = 0.0;
        double context = 0.0;
        std::size_t answered = 0;
        for (const auto* s : snaps) {
            reward += s->reward;
            context += static_cast<double>(s->context_at_eval);
            answered += s->answered ? 1 : 0;
        }
        const auto n = static_cast<double>(snaps.size());
        out << checkpoint << ',' << snaps.size() << ',' << format_fixed(reward / n, 4) << ',' << answered << ','
            << format_fixed(context / n, 1) << '\n';
    }
    return out.str();
}

std::string inherent_context_csv(const std::vector<LoggedTrajectory>& logged)
{
    std::map<std::string, std::vector<std::int64_t>> by_domain;
    for (const auto& l : logged) {
        const auto& t = l.trajectory;
        if (t.count(Role::continuation) > 0 || t.forced_final_prompts > 0 || t.termination != Termination::answered)
            continue;
        by_domain[std::string(to_string(t.domain))].push_back(t.context());
        by_domain["all"].push_back(t.context());
    }
    std::ostringstream out;
    out << "domain,trajectories,mean,median\n";
    for (Domain d : kAllDomains) {
        const auto it = by_domain.find(std::string(to_string(d)));
        if (it == by_domain.end())
            continue;
        const auto stats = context_stats(it->second);
        out << to_string(d) << ',' << stats.count << ',' << format_fixed(stats.mean, 1) << ',' << format_fixed(stats.median, 1)
            << '\n';
    }
    if (auto it = by_domain.find("all"); it != by_domain.end()) {
        const auto stats = context_stats(it->second);
        out << "all," << stats.count << ',' << format_fixed(stats.mean, 1) << ',' << format_fixed(stats.median, 1) << '\n';
    }
    return out.str();
}

} // namespace

int cmd_report(const ReportConfig& config, std::ostream& err)
{
    const auto traj_path = config.log_dir / "trajectories.jsonl";
    const auto scaling_path = config.log_dir / "scaling.jsonl";
    std::vector<LoggedTrajectory> logged;
    ScalingLog scaling;
    std::optional<PriceSheet> prices;
    std::vector<ScoreRow> scores;
    try {
        if (!fs::is_directory(config.log_dir))
            throw std::invalid_argument("log directory not found: " + config.log_dir.string());
        std::ifstream in(traj_path);
        if (!in)
            throw std::invalid_argument("no trajectories.jsonl in " + config.log_dir.string());
        logged = read_trajectory_log(in, traj_path.string());
        if (logged.empty())
            throw std::invalid_argument(traj_path.string() + ": no trajectory records");
        scaling = read_scaling_log(scaling_path);

        fs::path price_path = config.prices;
        if (price_path.empty()) {
            std::ifstream manifest(config.log_dir / "run_manifest.json");
            if (manifest) {
                const auto m = Json::parse(manifest);
                if (m.contains("prices") && m["prices"].is_string())
                    price_path = m["prices"].get<std::string>();
            }
        }
        if (!price_path.empty())
            prices = PriceSheet::load(price_path);
        if (!config.scores.empty())
            scores = load_scores_csv(config.scores);
    } catch (const std::exception& e) {
        err << "agentbench report: " << e.what() << '\n';
        return kExitBadConfig;
    }

    try {
        const auto out_dir = config.out.empty() ? config.log_dir / "report" : config.out;
        fs::create_directories(out_dir);

        std::vector<Trajectory> trajectories;
        for (const auto& l : logged)
            trajectories.push_back(l.trajectory);

        write_file(out_dir / "pass_at_k.csv", pass_at_k_csv(scaling.parallel));
        write_file(out_dir / "alignment.csv", alignment_csv(scaling.parallel));
        write_file(out_dir / "sequential.csv", sequential_csv(scaling.sequential));
        write_file(out_dir / "inherent_context.csv", inherent_context_csv(logged));

        std::ostringstream cost;
        if (prices) {
            const auto report = build_cost_report(trajectories, *prices, true);
            for (const auto& model : report.unpriced)
                err << "agentbench report: no price for model '" << model << "'; left out of cost.csv\n";
            report.write_csv(cost);
        } else {
            err << "agentbench report: no price sheet; cost.csv has token counts only\n";
            cost << "model,input_tokens,output_tokens,estimated\n";
            for (const auto& [model, usage] : aggregate_usage(trajectories))
                cost << model << ',' << usage.input_tokens << ',' << usage.output_tokens << ','
                     << (usage.estimated ? "true" : "false") << '\n';
        }
        write_file(out_dir / "cost.csv", cost.str());

        if (!scores.empty()) {
            std::ostringstream aggregate;
            aggregate_report(scores).write_csv(aggregate);
            write_file(out_dir / "aggregate.csv", aggregate.str());
        }
    } catch (const std::exception& e) {
        err << "agentbench report: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

} // namespace agentbench
