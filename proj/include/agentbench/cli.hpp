#pragma once

#include "agentbench/registry.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace agentbench {

enum class RunMode { single, parallel, sequential };

std::string_view to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view text);

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitBadConfig = 2,
    kExitConnectAbort = 3,
};

struct RunConfig {
    std::filesystem::path servers;
    std::filesystem::path tasks;
    /// Optional here; recorded in the run manifest for the report step.
    std::filesystem::path prices;
    RunMode mode = RunMode::single;
    int k = 4;
    /// Empty means the default grid.
    std::vector<std::int64_t> grid;
    ToolsetMode toolset_mode = ToolsetMode::full;
    std::size_t compress_target = 120;
    double temperature = 0.7;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    int workers = 1;
    /// Model tag recorded in logs unless a task script names its own.
    std::string model = "scripted";
    int max_turns = 32;
    std::int64_t context_budget = 196'000;
    int max_injections = 16;
    /// Probability that the simulated self-judge agrees with the oracle.
    double judge_accuracy = 0.8;
    double judge_temperature = 0.0;

    /// Throws InvalidConfig.
    void validate() const;
};

/// Writes trajectories.jsonl, scaling.jsonl and run_manifest.json under `out`.
/// Diagnostics go to `err`.
int cmd_run(const RunConfig& config, std::ostream& err);

struct ReportConfig {
    std::filesystem::path log_dir;
    /// Defaults to <log_dir>/report.
    std::filesystem::path out;
    /// Defaults to the path recorded in the run manifest.
    std::filesystem::path prices;
    /// Published-scores table; enables aggregate.csv.
    std::filesystem::path scores;
};

/// Reads run artifacts and writes pass_at_k.csv, sequential.csv, alignment.csv,
/// cost.csv, inherent_context.csv and, with scores, aggregate.csv.
int cmd_report(const ReportConfig& config, std::ostream& err);

/// Parses "8000,16000,32000" (k/K suffixes allowed: "8k,16k").
std::vector<std::int64_t> parse_grid(std::string_view text);

} // namespace agentbench
