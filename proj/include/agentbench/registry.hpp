#pragma once

#include "agentbench/json.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace agentbench {

class RegistryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A name that cannot be mapped onto [A-Za-z0-9_-]+.
class InvalidName : public RegistryError {
public:
    using RegistryError::RegistryError;
};

/// Two registrations produced the same qualified name.
class QualifiedNameCollision : public RegistryError {
public:
    using RegistryError::RegistryError;
};

class UnknownTool : public RegistryError {
public:
    explicit UnknownTool(std::string name)
        : RegistryError("unknown tool: " + name), name_(std::move(name))
    {
    }
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// Malformed schema document (bad JSON shape, required names not declared...).
class SchemaError : public RegistryError {
public:
    using RegistryError::RegistryError;
};

struct ParamSpec {
    std::string name;
    std::string type;
    std::string description;
    std::optional<Json> default_value;
    /// Any other JSON-Schema keywords (enum, items, ...), passed through verbatim.
    Json extra = Json::object();

    bool operator==(const ParamSpec&) const = default;
};

struct ToolSchema {
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;
    std::vector<std::string> required;

    /// MCP `tools/list` entry: {name, description, inputSchema}.
    static ToolSchema from_mcp(const Json& tool);
    /// JSON-Schema object for the parameters: {type: object, properties, required}.
    Json parameters_schema() const;
    Json to_mcp() const;
    /// Throws SchemaError on duplicate parameter names or undeclared required names.
    void validate() const;

    bool operator==(const ToolSchema&) const = default;
};

inline constexpr std::string_view kQualifierSeparator = "__";

enum class SeparatorPolicy {
    /// Expose as `server__tool`.
    qualify,
    /// The server already publishes globally unique names (domain_tool style); expose them as-is.
    verbatim,
};

bool is_valid_name(std::string_view name);

/// Replaces every character outside [A-Za-z0-9_-] with '_'. Throws InvalidName if empty.
std::string sanitize_name(std::string_view raw);

struct RegistryEntry {
    std::string qualified_name;
    std::string server_id;
    std::string original_name;
    /// Schema as published by the server (name = original name).
    ToolSchema schema;

    bool operator==(const RegistryEntry&) const = default;
};

struct Route {
    std::string server_id;
    std::string original_name;

    bool operator==(const Route&) const = default;
};

/// Global qualified-name → server routing map. Immutable once built; safe to
/// share read-only across threads.
class ToolRegistry {
public:
    using EntryMap = std::map<std::string, RegistryEntry, std::less<>>;

    ToolRegistry() = default;

    /// Throws UnknownTool.
    Route resolve_route(std::string_view qualified_name) const;
    const RegistryEntry* find(std::string_view qualified_name) const;

    /// Sorted by qualified name.
    const EntryMap& entries() const noexcept { return entries_; }
    const std::set<std::string, std::less<>>& servers() const noexcept { return servers_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    bool operator==(const ToolRegistry&) const = default;

private:
    friend class RegistryBuilder;
    friend ToolRegistry compress_descriptions(const ToolRegistry&, std::size_t);

    EntryMap entries_;
    std::set<std::string, std::less<>> servers_;
};

/// Single-writer build phase for a ToolRegistry.
class RegistryBuilder {
public:
    /// Records a server even if it exposes no tools. Throws InvalidName.
    RegistryBuilder& add_server(std::string_view server_id);

    /// Exposes each tool under `server_id__sanitized_name` (or verbatim). Throws
    /// InvalidName or QualifiedNameCollision; on throw nothing from this call is kept.
    RegistryBuilder& register_server_tools(std::string_view server_id, std::span<const ToolSchema> tools,
                                           SeparatorPolicy policy = SeparatorPolicy::qualify);

    ToolRegistry build() &&;

private:
    ToolRegistry registry_;
};

std::string qualify_name(std::string_view server_id, std::string_view tool_name,
                         SeparatorPolicy policy = SeparatorPolicy::qualify);

/// Text up to and including the first sentence terminator ('.', '!' or '?'
/// followed by whitespace or end of text) or the first newline.
std::string_view first_sentence(std::string_view text);

/// Truncate to `target_chars`, except that a cut inside the first sentence
/// keeps the whole first sentence instead.
std::string compress_description(std::string_view text, std::size_t target_chars);

/// Compresses every tool description and strips parameter defaults. target_chars >= 1.
ToolRegistry compress_descriptions(const ToolRegistry& registry, std::size_t target_chars);

/// OpenAI function-calling array, sorted by qualified name.
Json render_full(const ToolRegistry& registry);

/// Schemas back out of a render_full document; names are the qualified names.
std::vector<ToolSchema> parse_full(const Json& document);

inline constexpr std::size_t kMinimalDescriptionChars = 50;

/// One `name(p1, p2): description` line per tool, sorted by qualified name.
std::string render_minimal(const ToolRegistry& registry);

enum class ToolsetMode { full, compressed, minimal };

std::string_view to_string(ToolsetMode mode);
ToolsetMode toolset_mode_from_string(std::string_view text);

/// Text handed to a model for the given mode. `compress_target` applies to `compressed`.
std::string render_toolset(const ToolRegistry& registry, ToolsetMode mode, std::size_t compress_target = 120);

/// render_full entries with an extra top-level "x-route" object per entry so
/// the routing map survives a dump/load cycle.
Json dump_registry(const ToolRegistry& registry);
ToolRegistry load_registry(const Json& document);

} // namespace agentbench
