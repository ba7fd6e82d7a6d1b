#pragma once

#include "agentbench/judge.hpp"
#include "agentbench/json.hpp"
#include "agentbench/runtime.hpp"
#include "agentbench/task.hpp"
#include "agentbench/usage.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace agentbench {

inline constexpr double kSuccessThreshold = 0.99;
inline constexpr int kMaxParallelSamples = 4;
inline constexpr std::int64_t kDefaultGridLimit = 196'000;

struct ScalingConfig {
    int k = 1;
    /// Strictly ascending, positive token counts.
    std::vector<std::int64_t> checkpoint_grid;
    double judge_temperature = 0.0;
    std::uint64_t judge_seed = 0;
    double success_threshold = kSuccessThreshold;
    int max_injections = 16;

    /// Throws InvalidConfig.
    void validate() const;
};

/// Default grid: 8K doubling up to the limit, limit included.
std::vector<std::int64_t> default_checkpoint_grid(std::int64_t limit = kDefaultGridLimit);
/// Throws InvalidConfig unless strictly ascending and positive.
void validate_grid(std::span<const std::int64_t> grid);

// --- parallel ------------------------------------------------------------------

struct EpisodeOutcome {
    Trajectory trajectory;
    double reward = 0.0;
};

/// Runs one fresh, isolated episode for (task, seed) and scores it.
using EpisodeRunner = std::function<EpisodeOutcome(const TaskInstance& task, std::uint64_t seed)>;

/// K independent episodes, in sample order. `workers` > 1 runs them concurrently.
/// Throws InvalidConfig for K < 1 or seeds that are not K distinct values.
std::vector<EpisodeOutcome> run_parallel(const TaskInstance& task, const EpisodeRunner& runner, int k,
                                         std::span<const std::uint64_t> seeds, int workers = 1);

/// Per-task distinct seeds derived from a run seed.
std::vector<std::uint64_t> sample_seeds(std::uint64_t run_seed, std::string_view task_id, int k);

/// Fraction of tasks whose first K rewards contain one ≥ threshold.
/// Throws InvalidConfig when K < 1 or a task has fewer than K samples, InvalidInput
/// on an empty matrix or rewards outside [0, 1].
double pass_at_k(const std::vector<std::vector<double>>& rewards, int k, double threshold = kSuccessThreshold);

// --- self-choice -----------------------------------------------------------------

struct PointwiseSelection {
    std::size_t selected = 0;
    std::vector<Judgment> judgments;
};

struct Comparison {
    std::size_t left = 0;
    std::size_t right = 0;
    /// Absent when the ranking was malformed or the judge failed; the champion stays.
    std::optional<int> winner;
    std::string raw_text;
    bool judge_failed = false;
};

struct PairwiseSelection {
    std::size_t selected = 0;
    std::vector<Comparison> comparisons;
};

struct JudgeContext {
    const TaskInstance& task;
    /// Minimal toolset rendering embedded in judge prompts.
    std::string_view minimal_toolset;
    std::uint64_t seed = 0;
};

/// Every trajectory judged once; selects the first judged Correct, else index 0.
PointwiseSelection select_pointwise(std::span<const Trajectory> trajectories, JudgeClient& judge, const JudgeContext& ctx);

/// Champion tournament: champion starts at 0 and meets each challenger once, K-1 calls.
PairwiseSelection select_pairwise(std::span<const Trajectory> trajectories, JudgeClient& judge, const JudgeContext& ctx);

/// Among oracle-correct trajectories, the fraction judged Correct. Absent when none is
/// oracle-correct. Throws InvalidInput on a length mismatch.
std::optional<double> pointwise_alignment(std::span<const Judgment> judgments, std::span<const double> oracle_rewards,
                                          double threshold = kSuccessThreshold);

/// Pooled variant: counts across batches.
struct AlignmentTally {
    std::size_t oracle_correct = 0;
    std::size_t judged_correct = 0;

    void add(std::span<const Judgment> judgments, std::span<const double> oracle_rewards, double threshold = kSuccessThreshold);
    std::optional<double> value() const;
};

// --- sequential ------------------------------------------------------------------

struct SequentialSnapshot {
    std::int64_t checkpoint = 0;
    /// Context when the recorded answer was given; 0 when none was given by the checkpoint.
    std::int64_t context_at_eval = 0;
    double reward = 0.0;
    bool answered = false;
    /// Continuations injected before the recorded answer.
    int round = 0;
};

/// Scores the episode's current answer; the episode's host is live at that point.
using SequentialEvaluator = std::function<double(Episode& episode)>;

/// Continues one episode across the grid. After each answer the latest answer
/// given within a checkpoint is the one recorded for it; a continuation is then
/// injected until the last checkpoint is reached, the episode stops answering,
/// or `max_injections` is used up.
std::vector<SequentialSnapshot> run_sequential(Episode& episode, std::span<const std::int64_t> grid,
                                               const SequentialEvaluator& evaluate, int max_injections = 16);

// --- inherent context ----------------------------------------------------------

struct ContextStats {
    double mean = 0.0;
    double median = 0.0;
    std::size_t count = 0;
};

/// Final measured contexts. Throws InvalidInput on an empty batch or on a
/// trajectory that saw continuations or a forced-final prompt.
ContextStats inherent_context(std::span<const Trajectory> trajectories);
ContextStats context_stats(std::vector<std::int64_t> contexts);

// --- results file --------------------------------------------------------------

struct ParallelRecord {
    std::string task_id;
    Domain domain = Domain::reason;
    std::vector<double> rewards;
    std::vector<std::uint64_t> seeds;
    std::optional<PointwiseSelection> pointwise;
    std::optional<PairwiseSelection> pairwise;

    Json to_json() const;
    static ParallelRecord from_json(const Json& record);
};

struct SequentialRecord {
    std::string task_id;
    Domain domain = Domain::reason;
    std::uint64_t seed = 0;
    std::vector<SequentialSnapshot> snapshots;

    Json to_json() const;
    static SequentialRecord from_json(const Json& record);
};

/// Selected index after only the first k samples, replayed from the logged verdicts.
std::size_t pointwise_selected_at(const PointwiseSelection& selection, int k);
std::size_t pairwise_selected_at(const PairwiseSelection& selection, int k);

} // namespace agentbench
