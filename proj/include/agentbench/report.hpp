#pragma once

#include "agentbench/task.hpp"
#include "agentbench/usage.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace agentbench {

enum class Setting { baseline, general };

std::string_view to_string(Setting setting);
/// "baseline"/"B", "general"/"G".
Setting setting_from_string(std::string_view text);

struct ScoreRow {
    std::string model;
    Domain domain = Domain::reason;
    Setting setting = Setting::baseline;
    double score = 0.0;
    /// Optional benchmark within the domain; a domain mean averages its benchmarks.
    std::string benchmark;
};

/// CSV with a header naming at least model, domain, setting, score (benchmark optional).
/// Throws std::invalid_argument naming `source:line`.
std::vector<ScoreRow> parse_scores_csv(std::string_view csv, std::string_view source = "<scores>");
std::vector<ScoreRow> load_scores_csv(const std::filesystem::path& path);

/// (G - B) / B * 100 at full precision; absent when B == 0.
std::optional<double> relative_delta(double baseline, double general);

/// Half-away-from-zero rounding to `decimals` places.
double round_to(double value, int decimals);

struct DomainScores {
    std::optional<double> baseline;
    std::optional<double> general;
    std::optional<double> delta;
};

struct ModelReport {
    std::string model;
    std::map<Domain, DomainScores> domains;
    /// Unweighted mean of the domain means present.
    std::optional<double> avg_baseline;
    std::optional<double> avg_general;
    /// relative_delta(avg_baseline, avg_general).
    std::optional<double> avg_delta;
    /// Some domain is missing for one of the settings.
    bool incomplete = false;
};

struct Report {
    /// Sorted by model name.
    std::vector<ModelReport> models;

    const ModelReport& at(std::string_view model) const;
    /// One row per model; values rounded to one decimal, blanks for absent values.
    void write_csv(std::ostream& out) const;
};

Report aggregate_report(std::span<const ScoreRow> rows);

} // namespace agentbench
