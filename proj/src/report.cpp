#include "agentbench/report.hpp"

#include "agentbench/prompts.hpp"
#include "agentbench/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace agentbench {

std::string_view to_string(Setting setting)
{
    return setting == Setting::baseline ? "baseline" : "general";
}

Setting setting_from_string(std::string_view text)
{
    const auto lower = to_lower(trim(text));
    if (lower == "baseline" || lower == "b")
        return Setting::baseline;
    if (lower == "general" || lower == "g")
        return Setting::general;
    throw std::invalid_argument("unknown setting '" + std::string(text) + "'");
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos)
            return cells;
        start = comma + 1;
    }
}

double parse_double(std::string_view text)
{
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value))
        throw std::invalid_argument("bad number '" + std::string(text) + "'");
    return value;
}

double mean(const std::vector<double>& values)
{
    double sum = 0.0;
    for (double v : values)
        sum += v;
    return sum / static_cast<double>(values.size());
}

} // namespace

std::vector<ScoreRow> parse_scores_csv(std::string_view csv, std::string_view source)
{
    std::vector<ScoreRow> rows;
    std::map<std::string, std::size_t> column;
    std::istringstream in{std::string(csv)};
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trim(line).empty() || trim(line).front() == '#')
            continue;
        const auto cells = split_csv_line(line);
        const auto where = std::string(source) + ":" + std::to_string(line_no);
        if (column.empty()) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                column[to_lower(cells[i])] = i;
            for (const char* required : {"model", "domain", "setting", "score"}) {
                if (!column.count(required))
                    throw std::invalid_argument(where + ": header lacks column '" + required + "'");
            }
            continue;
        }
        if (cells.size() != column.size())
            throw std::invalid_argument(where + ": expected " + std::to_string(column.size()) + " cells");
        try {
            ScoreRow row;
            row.model = std::string(cells[column["model"]]);
            row.domain = domain_from_string(cells[column["domain"]]);
            row.setting = setting_from_string(cells[column["setting"]]);
            row.score = parse_double(cells[column["score"]]);
            if (auto it = column.find("benchmark"); it != column.end())
                row.benchmark = std::string(cells[it->second]);
            if (row.model.empty())
                throw std::invalid_argument("empty model");
            rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw std::invalid_argument(where + ": " + e.what());
        }
    }
    return rows;
}

std::vector<ScoreRow> load_scores_csv(const std::filesystem::path& path)
{
    return parse_scores_csv(prompts::read_file(path), path.string());
}

std::optional<double> relative_delta(double baseline, double general)
{
    if (baseline == 0.0)
        return std::nullopt;
    return (general - baseline) / baseline * 100.0;
}

double round_to(double value, int decimals)
{
    const double scale = std::pow(10.0, decimals);
    // Nudge by a few ulps so that 28.65 stored as 28.6499999... still rounds up.
    const double scaled = value * scale;
    const double nudged = scaled + std::copysign(std::fabs(scaled) * 4 * std::numeric_limits<double>::epsilon(), scaled);
    return std::round(nudged) / scale;
}

Report aggregate_report(std::span<const ScoreRow> rows)
{
    // model -> domain -> setting -> scores (benchmarks, or repeated rows)
    std::map<std::string, std::map<Domain, std::map<Setting, std::vector<double>>>> grouped;
    for (const auto& row : rows)
        grouped[row.model][row.domain][row.setting].push_back(row.score);

    Report report;
    for (auto& [model, domains] : grouped) {
        ModelReport mr;
        mr.model = model;
        std::vector<double> base_means;
        std::vector<double> general_means;
        for (Domain d : kAllDomains) {
            auto it = domains.find(d);
            if (it == domains.end()) {
                mr.incomplete = true;
                continue;
            }
            auto& settings = it->second;
            for (auto& [setting, scores] : settings) {
                // Sorted so the sum does not depend on input order.
                std::sort(scores.begin(), scores.end());
            }
            DomainScores ds;
            if (auto b = settings.find(Setting::baseline); b != settings.end()) {
                ds.baseline = mean(b->second);
                base_means.push_back(*ds.baseline);
            } else {
                mr.incomplete = true;
            }
            if (auto g = settings.find(Setting::general); g != settings.end()) {
                ds.general = mean(g->second);
                general_means.push_back(*ds.general);
            } else {
                mr.incomplete = true;
            }
            if (ds.baseline && ds.general)
                ds.delta = relative_delta(*ds.baseline, *ds.general);
            mr.domains[d] = ds;
        }
        if (!base_means.empty())
            mr.avg_baseline = mean(base_means);
        if (!general_means.empty())
            mr.avg_general = mean(general_means);
        if (mr.avg_baseline && mr.avg_general)
            mr.avg_delta = relative_delta(*mr.avg_baseline, *mr.avg_general);
        report.models.push_back(std::move(mr));
    }
    return report;
}

const ModelReport& Report::at(std::string_view model) const
{
    for (const auto& m : models) {
        if (m.model == model)
            return m;
    }
    throw std::out_of_range("no report for model '" + std::string(model) + "'");
}

void Report::write_csv(std::ostream& out) const
{
    auto cell = [](const std::optional<double>& v) { return v ? format_fixed(round_to(*v, 1), 1) : std::string(); };
    out << "model";
    for (Domain d : kAllDomains)
        out << ',' << to_string(d) << "_B," << to_string(d) << "_G," << to_string(d) << "_delta";
    out << ",avg_B,avg_G,avg_delta,incomplete\n";
    for (const auto& m : models) {
        out << m.model;
        for (Domain d : kAllDomains) {
            const auto it = m.domains.find(d);
            const DomainScores ds = it == m.domains.end() ? DomainScores{} : it->second;
            out << ',' << cell(ds.baseline) << ',' << cell(ds.general) << ',' << cell(ds.delta);
        }
        out << ',' << cell(m.avg_baseline) << ',' << cell(m.avg_general) << ',' << cell(m.avg_delta) << ','
            << (m.incomplete ? "true" : "false") << '\n';
    }
}

} // namespace agentbench
