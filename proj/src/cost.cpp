#include "agentbench/cost.hpp"

#include "agentbench/prompts.hpp"
#include "agentbench/text.hpp"

#include <cmath>
#include <ostream>

namespace agentbench {

namespace {

double price_field(const Json& entry, const char* key, const std::string& model)
{
    const auto it = entry.find(key);
    if (it == entry.end() || !it->is_number())
        throw InvalidInput("price for '" + model + "' needs a numeric '" + key + "'");
    const double v = it->get<double>();
    if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidInput("price for '" + model + "' must be non-negative");
    return v;
}

} // namespace

PriceSheet PriceSheet::from_json(const Json& sheet)
{
    if (!sheet.is_object())
        throw InvalidInput("price sheet must be an object keyed by model");
    PriceSheet out;
    for (const auto& [model, entry] : sheet.items()) {
        if (!entry.is_object())
            throw InvalidInput("price for '" + model + "' must be an object");
        ModelPrice price{price_field(entry, "input", model), price_field(entry, "output", model), std::nullopt};
        if (auto cached = entry.find("cached_input"); cached != entry.end() && !cached->is_null())
            price.cached_input = price_field(entry, "cached_input", model);
        out.set(model, price);
    }
    return out;
}

PriceSheet PriceSheet::load(const std::filesystem::path& path)
{
    return from_json(Json::parse(prompts::read_file(path)));
}

void PriceSheet::set(std::string model, ModelPrice price)
{
    if (!(price.input >= 0.0) || !(price.output >= 0.0) || (price.cached_input && !(*price.cached_input >= 0.0)))
        throw InvalidInput("prices must be non-negative");
    prices_[std::move(model)] = price;
}

const ModelPrice& PriceSheet::at(std::string_view model) const
{
    const auto it = prices_.find(model);
    if (it == prices_.end())
        throw std::out_of_range("no price for model '" + std::string(model) + "'");
    return it->second;
}

bool PriceSheet::contains(std::string_view model) const
{
    return prices_.find(model) != prices_.end();
}

double estimate_cost(const TokenUsage& usage, double price_in, double price_out)
{
    if (usage.input_tokens < 0 || usage.output_tokens < 0)
        throw InvalidInput("token counts must be non-negative");
    if (!(price_in >= 0.0) || !(price_out >= 0.0))
        throw InvalidInput("prices must be non-negative");
    return price_in * static_cast<double>(usage.input_tokens) / 1e6 + price_out * static_cast<double>(usage.output_tokens) / 1e6;
}

double estimate_cost(const TokenUsage& usage, const ModelPrice& price)
{
    return estimate_cost(usage, price.input, price.output);
}

std::map<std::string, TokenUsage> aggregate_usage(std::span<const Trajectory> trajectories)
{
    std::map<std::string, TokenUsage> out;
    for (const auto& t : trajectories)
        out[t.model] += t.usage;
    return out;
}

CostReport build_cost_report(std::span<const Trajectory> trajectories, const PriceSheet& prices, bool skip_unpriced)
{
    std::map<std::pair<std::string, Domain>, TokenUsage> grouped;
    for (const auto& t : trajectories)
        grouped[{t.model, t.domain}] += t.usage;

    CostReport report;
    for (const auto& [key, usage] : grouped) {
        if (skip_unpriced && !prices.contains(key.first)) {
            if (report.unpriced.empty() || report.unpriced.back() != key.first)
                report.unpriced.push_back(key.first);
            continue;
        }
        const double usd = estimate_cost(usage, prices.at(key.first));
        report.rows.push_back({key.first, key.second, usage, usd});
        report.model_totals[key.first] += usd;
        report.total += usd;
    }
    return report;
}

void CostReport::write_csv(std::ostream& out) const
{
    out << "model,domain,input_tokens,output_tokens,estimated,usd\n";
    std::map<std::string, TokenUsage> per_model;
    for (const auto& row : rows) {
        out << row.model << ',' << to_string(row.domain) << ',' << row.usage.input_tokens << ',' << row.usage.output_tokens
            << ',' << (row.usage.estimated ? "true" : "false") << ',' << format_fixed(row.usd, 2) << '\n';
        per_model[row.model] += row.usage;
    }
    TokenUsage all;
    for (const auto& [model, usd] : model_totals) {
        const auto& usage = per_model[model];
        all += usage;
        out << model << ",all," << usage.input_tokens << ',' << usage.output_tokens << ','
            << (usage.estimated ? "true" : "false") << ',' << format_fixed(usd, 2) << '\n';
    }
    out << "all,all," << all.input_tokens << ',' << all.output_tokens << ',' << (all.estimated ? "true" : "false") << ','
        << format_fixed(total, 2) << '\n';
}

} // namespace agentbench
