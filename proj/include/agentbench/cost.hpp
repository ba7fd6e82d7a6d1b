#pragma once

#include "agentbench/json.hpp"
#include "agentbench/runtime.hpp"
#include "agentbench/usage.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace agentbench {

/// USD per one million tokens.
struct ModelPrice {
    double input = 0.0;
    double output = 0.0;
    /// Recorded for completeness; cost estimates never use it.
    std::optional<double> cached_input;
};

class PriceSheet {
public:
    /// {"gpt-5": {"input": 1.25, "output": 10.0, "cached_input": 0.125}, ...}
    static PriceSheet from_json(const Json& sheet);
    static PriceSheet load(const std::filesystem::path& path);

    void set(std::string model, ModelPrice price);
    /// Throws std::out_of_range naming the model.
    const ModelPrice& at(std::string_view model) const;
    bool contains(std::string_view model) const;
    const std::map<std::string, ModelPrice, std::less<>>& models() const noexcept { return prices_; }

private:
    std::map<std::string, ModelPrice, std::less<>> prices_;
};

/// p_in * T_in / 1e6 + p_out * T_out / 1e6. Throws InvalidInput on negative arguments.
double estimate_cost(const TokenUsage& usage, double price_in, double price_out);
double estimate_cost(const TokenUsage& usage, const ModelPrice& price);

std::map<std::string, TokenUsage> aggregate_usage(std::span<const Trajectory> trajectories);

struct CostRow {
    std::string model;
    Domain domain = Domain::reason;
    TokenUsage usage;
    double usd = 0.0;
};

struct CostReport {
    /// Sorted by (model, domain).
    std::vector<CostRow> rows;
    std::map<std::string, double> model_totals;
    double total = 0.0;
    /// Models left out because the sheet has no price for them.
    std::vector<std::string> unpriced;

    /// model,domain,input_tokens,output_tokens,estimated,usd with totals rows; amounts in cents.
    void write_csv(std::ostream& out) const;
};

/// Throws std::out_of_range when a model has no price, unless `skip_unpriced`.
CostReport build_cost_report(std::span<const Trajectory> trajectories, const PriceSheet& prices, bool skip_unpriced = false);

} // namespace agentbench
