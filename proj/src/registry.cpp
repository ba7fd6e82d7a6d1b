#include "agentbench/registry.hpp"

#include "agentbench/text.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace agentbench {

namespace {

bool is_name_char(char c)
{
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

std::string require_string(const Json& object, std::string_view key, std::string_view context)
{
    auto it = object.find(key);
    if (it == object.end() || !it->is_string())
        throw SchemaError(std::string(context) + ": missing string field '" + std::string(key) + "'");
    return it->get<std::string>();
}

std::string optional_string(const Json& object, std::string_view key)
{
    auto it = object.find(key);
    return it != object.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

ToolSchema schema_from_parts(std::string name, std::string description, const Json& parameters)
{
    ToolSchema schema{std::move(name), std::move(description), {}, {}};
    if (parameters.is_null())
        return schema;
    if (!parameters.is_object())
        throw SchemaError(schema.name + ": parameters must be an object");

    if (auto props = parameters.find("properties"); props != parameters.end()) {
        if (!props->is_object())
            throw SchemaError(schema.name + ": properties must be an object");
        for (const auto& [param_name, prop] : props->items()) {
            if (!prop.is_object())
                throw SchemaError(schema.name + ": property '" + param_name + "' must be an object");
            ParamSpec param;
            param.name = param_name;
            for (const auto& [key, value] : prop.items()) {
                if (key == "type" && value.is_string())
                    param.type = value.get<std::string>();
                else if (key == "description" && value.is_string())
                    param.description = value.get<std::string>();
                else if (key == "default")
                    param.default_value = value;
                else
                    param.extra[key] = value;
            }
            schema.params.push_back(std::move(param));
        }
    }
    if (auto req = parameters.find("required"); req != parameters.end()) {
        if (!req->is_array())
            throw SchemaError(schema.name + ": required must be an array");
        for (const auto& r : *req) {
            if (!r.is_string())
                throw SchemaError(schema.name + ": required entries must be strings");
            schema.required.push_back(r.get<std::string>());
        }
    }
    schema.validate();
    return schema;
}

Json function_entry(const std::string& qualified_name, const ToolSchema& schema)
{
    Json function = Json::object();
    function["name"] = qualified_name;
    function["description"] = schema.description;
    function["parameters"] = schema.parameters_schema();
    Json entry = Json::object();
    entry["type"] = "function";
    entry["function"] = std::move(function);
    return entry;
}

} // namespace

ToolSchema ToolSchema::from_mcp(const Json& tool)
{
    if (!tool.is_object())
        throw SchemaError("tool entry must be an object");
    auto name = require_string(tool, "name", "tool");
    auto schema_it = tool.find("inputSchema");
    const Json parameters = schema_it != tool.end() ? *schema_it : Json();
    return schema_from_parts(std::move(name), optional_string(tool, "description"), parameters);
}

Json ToolSchema::parameters_schema() const
{
    Json properties = Json::object();
    for (const auto& param : params) {
        Json prop = Json::object();
        if (!param.type.empty())
            prop["type"] = param.type;
        if (!param.description.empty())
            prop["description"] = param.description;
        if (param.default_value)
            prop["default"] = *param.default_value;
        for (const auto& [key, value] : param.extra.items())
            prop[key] = value;
        properties[param.name] = std::move(prop);
    }
    Json out = Json::object();
    out["type"] = "object";
    out["properties"] = std::move(properties);
    out["required"] = required;
    return out;
}

Json ToolSchema::to_mcp() const
{
    Json out = Json::object();
    out["name"] = name;
    out["description"] = description;
    out["inputSchema"] = parameters_schema();
    return out;
}

void ToolSchema::validate() const
{
    std::unordered_set<std::string_view> seen;
    for (const auto& param : params) {
        if (!seen.insert(param.name).second)
            throw SchemaError(name + ": duplicate parameter '" + param.name + "'");
    }
    for (const auto& r : required) {
        if (!seen.contains(r))
            throw SchemaError(name + ": required parameter '" + r + "' is not declared");
    }
}

bool is_valid_name(std::string_view name)
{
    return !name.empty() && std::all_of(name.begin(), name.end(), is_name_char);
}

std::string sanitize_name(std::string_view raw)
{
    std::string out(raw);
    for (auto& c : out) {
        if (!is_name_char(c))
            c = '_';
    }
    if (out.empty())
        throw InvalidName("empty tool name");
    return out;
}

std::string qualify_name(std::string_view server_id, std::string_view tool_name, SeparatorPolicy policy)
{
    if (policy == SeparatorPolicy::verbatim)
        return sanitize_name(tool_name);
    return std::string(server_id) + std::string(kQualifierSeparator) + sanitize_name(tool_name);
}

Route ToolRegistry::resolve_route(std::string_view qualified_name) const
{
    const auto* entry = find(qualified_name);
    if (entry == nullptr)
        throw UnknownTool(std::string(qualified_name));
    return {entry->server_id, entry->original_name};
}

const RegistryEntry* ToolRegistry::find(std::string_view qualified_name) const
{
    auto it = entries_.find(qualified_name);
    return it == entries_.end() ? nullptr : &it->second;
}

RegistryBuilder& RegistryBuilder::add_server(std::string_view server_id)
{
    if (!is_valid_name(server_id))
        throw InvalidName("invalid server id: '" + std::string(server_id) + "'");
    registry_.servers_.emplace(server_id);
    return *this;
}

RegistryBuilder& RegistryBuilder::register_server_tools(std::string_view server_id, std::span<const ToolSchema> tools,
                                                        SeparatorPolicy policy)
{
    if (!is_valid_name(server_id))
        throw InvalidName("invalid server id: '" + std::string(server_id) + "'");

    // Stage first so a failing batch leaves the registry untouched.
    std::vector<RegistryEntry> staged;
    staged.reserve(tools.size());
    std::unordered_set<std::string> batch_names;
    for (const auto& tool : tools) {
        tool.validate();
        auto qualified = qualify_name(server_id, tool.name, policy);
        if (registry_.entries_.contains(qualified) || !batch_names.insert(qualified).second) {
            const auto* existing = registry_.find(qualified);
            throw QualifiedNameCollision("qualified name '" + qualified + "' from server '" + std::string(server_id)
                                         + "' already registered"
                                         + (existing ? " by server '" + existing->server_id + "'" : std::string{}));
        }
        staged.push_back({std::move(qualified), std::string(server_id), tool.name, tool});
    }

    registry_.servers_.emplace(server_id);
    for (auto& entry : staged) {
        auto key = entry.qualified_name;
        registry_.entries_.emplace(std::move(key), std::move(entry));
    }
    return *this;
}

ToolRegistry RegistryBuilder::build() &&
{
    return std::move(registry_);
}

std::string_view first_sentence(std::string_view text)
{
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n')
            return text.substr(0, i);
        if ((c == '.' || c == '!' || c == '?')
            && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])) != 0))
            return text.substr(0, i + 1);
    }
    return text;
}

std::string compress_description(std::string_view text, std::size_t target_chars)
{
    if (target_chars == 0)
        throw std::invalid_argument("compress target must be at least 1 character");
    if (text.size() <= target_chars)
        return std::string(text);
    const auto sentence = first_sentence(text);
    if (sentence.size() > target_chars)
        return std::string(sentence);
    return std::string(utf8_prefix(text, target_chars));
}

ToolRegistry compress_descriptions(const ToolRegistry& registry, std::size_t target_chars)
{
    if (target_chars == 0)
        throw std::invalid_argument("compress target must be at least 1 character");
    ToolRegistry out = registry;
    for (auto& [name, entry] : out.entries_) {
        entry.schema.description = compress_description(entry.schema.description, target_chars);
        for (auto& param : entry.schema.params)
            param.default_value.reset();
    }
    return out;
}

Json render_full(const ToolRegistry& registry)
{
    Json document = Json::array();
    for (const auto& [qualified, entry] : registry.entries())
        document.push_back(function_entry(qualified, entry.schema));
    return document;
}

std::vector<ToolSchema> parse_full(const Json& document)
{
    if (!document.is_array())
        throw SchemaError("function-calling document must be an array");
    std::vector<ToolSchema> out;
    out.reserve(document.size());
    for (const auto& entry : document) {
        if (!entry.is_object() || entry.value("type", "") != "function" || !entry.contains("function"))
            throw SchemaError("entry is not a function declaration");
        const auto& function = entry["function"];
        auto name = require_string(function, "name", "function");
        auto params_it = function.find("parameters");
        out.push_back(schema_from_parts(std::move(name), optional_string(function, "description"),
                                        params_it != function.end() ? *params_it : Json()));
    }
    return out;
}

std::string render_minimal(const ToolRegistry& registry)
{
    std::string out;
    for (const auto& [qualified, entry] : registry.entries()) {
        out += qualified;
        out += '(';
        for (std::size_t i = 0; i < entry.schema.params.size(); ++i) {
            if (i > 0)
                out += ", ";
            out += entry.schema.params[i].name;
        }
        out += "): ";
        std::string description(utf8_prefix(entry.schema.description, kMinimalDescriptionChars));
        std::replace(description.begin(), description.end(), '\n', ' ');
        std::replace(description.begin(), description.end(), '\r', ' ');
        out += description;
        out += '\n';
    }
    return out;
}

std::string_view to_string(ToolsetMode mode)
{
    switch (mode) {
    case ToolsetMode::full:
        return "full";
    case ToolsetMode::compressed:
        return "compressed";
    case ToolsetMode::minimal:
        return "minimal";
    }
    return "full";
}

ToolsetMode toolset_mode_from_string(std::string_view text)
{
    if (text == "full")
        return ToolsetMode::full;
    if (text == "compressed")
        return ToolsetMode::compressed;
    if (text == "minimal")
        return ToolsetMode::minimal;
    throw std::invalid_argument("unknown toolset mode: " + std::string(text));
}

std::string render_toolset(const ToolRegistry& registry, ToolsetMode mode, std::size_t compress_target)
{
    switch (mode) {
    case ToolsetMode::full:
        return registry.empty() ? std::string{} : render_full(registry).dump();
    case ToolsetMode::compressed:
        return registry.empty() ? std::string{} : render_full(compress_descriptions(registry, compress_target)).dump();
    case ToolsetMode::minimal:
        return render_minimal(registry);
    }
    return {};
}

Json dump_registry(const ToolRegistry& registry)
{
    Json document = Json::array();
    for (const auto& [qualified, entry] : registry.entries()) {
        auto item = function_entry(qualified, entry.schema);
        item["x-route"] = Json{{"server_id", entry.server_id}, {"original_name", entry.original_name}};
        document.push_back(std::move(item));
    }
    return document;
}

ToolRegistry load_registry(const Json& document)
{
    if (!document.is_array())
        throw SchemaError("registry dump must be an array");
    // Group per server, preserving document order inside each group.
    std::map<std::string, std::vector<std::pair<std::string, ToolSchema>>> per_server;
    auto schemas = parse_full(document);
    for (std::size_t i = 0; i < document.size(); ++i) {
        const auto& item = document[i];
        auto route_it = item.find("x-route");
        if (route_it == item.end() || !route_it->is_object())
            throw SchemaError("registry dump entry '" + schemas[i].name + "' has no x-route");
        auto server = require_string(*route_it, "server_id", "x-route");
        auto original = require_string(*route_it, "original_name", "x-route");
        auto qualified = schemas[i].name;
        schemas[i].name = original;
        per_server[server].emplace_back(std::move(qualified), std::move(schemas[i]));
    }

    RegistryBuilder builder;
    for (auto& [server, tools] : per_server) {
        for (auto& [qualified, schema] : tools) {
            const auto policy = qualified == qualify_name(server, schema.name, SeparatorPolicy::qualify)
                ? SeparatorPolicy::qualify
                : SeparatorPolicy::verbatim;
            if (qualify_name(server, schema.name, policy) != qualified)
                throw SchemaError("x-route of '" + qualified + "' does not match its name");
            builder.register_server_tools(server, std::span<const ToolSchema>(&schema, 1), policy);
        }
    }
    return std::move(builder).build();
}

} // namespace agentbench
