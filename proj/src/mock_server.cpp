#include "agentbench/mock_server.hpp"

#include "agentbench/jsonrpc.hpp"
#include "agentbench/text.hpp"

#include <array>
#include <chrono>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <thread>

namespace agentbench {

namespace {

using jsonrpc::RpcError;

constexpr std::array<std::string_view, 12> kVerbs = {"fetch", "search", "compute", "convert", "list", "lookup",
                                                     "summarize", "validate", "resolve", "query", "estimate", "render"};
constexpr std::array<std::string_view, 12> kObjects = {"records", "datasets", "articles", "coordinates", "compounds",
                                                       "packages", "filings", "schedules", "models", "units",
                                                       "observations", "collections"};
constexpr std::array<std::string_view, 8> kParamNames = {"query", "limit", "namespace", "identifier",
                                                         "format", "region", "start_date", "include_metadata"};
constexpr std::array<std::string_view, 8> kParamTypes = {"string", "integer", "string", "string",
                                                         "string", "string", "string", "boolean"};

ToolSchema param_tool(std::string name, std::string description, std::vector<std::pair<std::string, std::string>> params)
{
    ToolSchema tool;
    tool.name = std::move(name);
    tool.description = std::move(description);
    for (auto& [param, type] : params) {
        tool.params.push_back({param, type, "The " + param + " argument.", std::nullopt, Json::object()});
        tool.required.push_back(param);
    }
    return tool;
}

std::vector<ToolSchema> calculator_tools()
{
    return {
        param_tool("add", "Add two numbers and return the sum.", {{"a", "number"}, {"b", "number"}}),
        param_tool("mul", "Multiply two numbers and return the product.", {{"a", "number"}, {"b", "number"}}),
        param_tool("div", "Divide a by b. Division by zero is reported as a tool error.", {{"a", "number"}, {"b", "number"}}),
    };
}

std::vector<ToolSchema> kv_tools()
{
    return {
        param_tool("get", "Read the value stored under a key.", {{"key", "string"}}),
        param_tool("set", "Store a string value under a key, replacing any previous value.", {{"key", "string"}, {"value", "string"}}),
        param_tool("list_keys", "List all stored keys in lexicographic order.", {}),
    };
}

const Json& require_arg(const Json& arguments, const std::string& name)
{
    auto it = arguments.find(name);
    if (it == arguments.end())
        throw RpcError(jsonrpc::kInvalidParams, "missing required argument '" + name + "'");
    return *it;
}

double number_arg(const Json& arguments, const std::string& name)
{
    const auto& value = require_arg(arguments, name);
    if (!value.is_number())
        throw RpcError(jsonrpc::kInvalidParams, "argument '" + name + "' must be a number");
    return value.get<double>();
}

std::string string_arg(const Json& arguments, const std::string& name)
{
    const auto& value = require_arg(arguments, name);
    if (value.is_string())
        return value.get<std::string>();
    if (value.is_number())
        return format_number(value.get<double>());
    throw RpcError(jsonrpc::kInvalidParams, "argument '" + name + "' must be a string");
}

Json state_json(const std::map<std::string, std::string>& kv)
{
    Json out = Json::object();
    for (const auto& [k, v] : kv)
        out[k] = v;
    return out;
}

} // namespace

std::vector<ToolSchema> synthetic_tools(std::size_t count, std::string_view salt)
{
    std::vector<ToolSchema> tools;
    tools.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t h = mix_seed(fnv1a(salt), i);
        const auto verb = kVerbs[h % kVerbs.size()];
        const auto object = kObjects[(h >> 8) % kObjects.size()];

        ToolSchema tool;
        auto suffix = std::to_string(i);
        if (suffix.size() < 3)
            suffix.insert(0, 3 - suffix.size(), '0');
        tool.name = std::string(verb) + "_" + std::string(object) + "_" + suffix;
        tool.description = "Use this tool to " + std::string(verb) + " " + std::string(object)
            + " from the connected service. "
              "Results are returned as structured JSON, ordered by relevance, and paginated when the "
              "response would exceed the configured limit. Supports filtering by namespace and region; "
              "unknown identifiers produce an empty result rather than an error. Rate limits of the "
              "upstream provider apply to every call made through this tool.";

        const std::size_t n_params = 1 + (h >> 16) % 4;
        for (std::size_t p = 0; p < n_params; ++p) {
            const auto idx = (p + (h >> 24)) % kParamNames.size();
            ParamSpec param;
            param.name = std::string(kParamNames[idx]);
            param.type = std::string(kParamTypes[idx]);
            param.description = "The " + param.name + " used to narrow the " + std::string(object) + " request.";
            if (param.type == "integer" && ((h >> 32) & 1) != 0)
                param.default_value = 10;
            if (param.type == "boolean")
                param.default_value = false;
            tool.params.push_back(std::move(param));
        }
        tool.required.push_back(tool.params.front().name);
        tools.push_back(std::move(tool));
    }
    return tools;
}

MockToolServer::MockToolServer()
    : MockToolServer(Options{})
{
}

MockToolServer::MockToolServer(Options options)
    : options_(std::move(options)), synthetic_(synthetic_tools(options_.synthetic, options_.label))
{
}

std::vector<ToolSchema> MockToolServer::listed_tools() const
{
    std::vector<ToolSchema> tools;
    if (options_.calculator) {
        auto calc = calculator_tools();
        tools.insert(tools.end(), calc.begin(), calc.end());
    }
    if (options_.kv) {
        auto kv = kv_tools();
        tools.insert(tools.end(), kv.begin(), kv.end());
    }
    tools.insert(tools.end(), synthetic_.begin(), synthetic_.end());
    if (options_.sleep_tool)
        tools.push_back(param_tool("sleep", "Sleep for the given number of milliseconds.", {{"ms", "integer"}}));
    if (options_.crash_tool)
        tools.push_back(param_tool("crash", "Terminate the server process abruptly.", {}));
    return tools;
}

std::map<std::string, std::string> MockToolServer::kv_state() const
{
    std::lock_guard lock(mutex_);
    return kv_;
}

std::size_t MockToolServer::call_count() const
{
    std::lock_guard lock(mutex_);
    return calls_;
}

Json MockToolServer::call_tool(const std::string& name, const Json& arguments)
{
    if (options_.calculator && (name == "add" || name == "mul" || name == "div")) {
        const double a = number_arg(arguments, "a");
        const double b = number_arg(arguments, "b");
        if (name == "add")
            return jsonrpc::text_result(format_number(a + b), false);
        if (name == "mul")
            return jsonrpc::text_result(format_number(a * b), false);
        if (b == 0.0)
            return jsonrpc::text_result("division by zero", true);
        return jsonrpc::text_result(format_number(a / b), false);
    }

    if (options_.kv && (name == "get" || name == "set" || name == "list_keys" || name == "dump")) {
        std::lock_guard lock(mutex_);
        if (name == "get") {
            const auto key = string_arg(arguments, "key");
            auto it = kv_.find(key);
            if (it == kv_.end())
                return jsonrpc::text_result("key not found: " + key, true);
            return jsonrpc::text_result(it->second, false);
        }
        if (name == "set") {
            const auto key = string_arg(arguments, "key");
            kv_[key] = string_arg(arguments, "value");
            return jsonrpc::text_result("ok", false);
        }
        if (name == "list_keys") {
            Json keys = Json::array();
            for (const auto& [k, v] : kv_)
                keys.push_back(k);
            return jsonrpc::text_result(keys.dump(), false);
        }
        return jsonrpc::text_result(state_json(kv_).dump(), false);
    }

    if (options_.sleep_tool && name == "sleep") {
        const auto& ms = require_arg(arguments, "ms");
        if (!ms.is_number_integer())
            throw RpcError(jsonrpc::kInvalidParams, "argument 'ms' must be an integer");
        std::this_thread::sleep_for(std::chrono::milliseconds(ms.get<long long>()));
        return jsonrpc::text_result("slept " + std::to_string(ms.get<long long>()) + " ms", false);
    }

    if (options_.crash_tool && name == "crash") {
        if (options_.on_crash)
            options_.on_crash();
        std::_Exit(3);
    }

    for (const auto& tool : synthetic_) {
        if (tool.name != name)
            continue;
        for (const auto& required : tool.required)
            require_arg(arguments, required);
        return jsonrpc::text_result("server=" + options_.label + " tool=" + name, false);
    }

    throw RpcError(jsonrpc::kInvalidParams, "unknown tool: " + name);
}

Json MockToolServer::handle(const Json& request)
{
    const bool has_id = request.is_object() && request.contains("id");
    const Json id = has_id ? request["id"] : Json();
    if (!request.is_object() || request.value("jsonrpc", "") != "2.0" || !request.contains("method")
        || !request["method"].is_string())
        return jsonrpc::make_error(id, jsonrpc::kInvalidRequest, "invalid request");
    if (!has_id)
        return Json(); // notification

    const auto method = request["method"].get<std::string>();
    const Json params = request.value("params", Json::object());
    try {
        if (method == "initialize") {
            Json result = Json::object();
            result["protocolVersion"] = jsonrpc::kProtocolVersion;
            result["capabilities"] = Json{{"tools", Json::object()}};
            result["serverInfo"] = Json{{"name", options_.label}, {"version", "1.0.0"}};
            return jsonrpc::make_result(id, std::move(result));
        }
        if (method == "tools/list") {
            Json tools = Json::array();
            for (const auto& tool : listed_tools())
                tools.push_back(tool.to_mcp());
            return jsonrpc::make_result(id, Json{{"tools", std::move(tools)}});
        }
        if (method == "tools/call") {
            if (!params.is_object() || !params.contains("name") || !params["name"].is_string())
                throw RpcError(jsonrpc::kInvalidParams, "tools/call requires a tool name");
            const Json arguments = params.value("arguments", Json::object());
            if (!arguments.is_object())
                throw RpcError(jsonrpc::kInvalidParams, "arguments must be an object");
            {
                std::lock_guard lock(mutex_);
                ++calls_;
            }
            return jsonrpc::make_result(id, call_tool(params["name"].get<std::string>(), arguments));
        }
        return jsonrpc::make_error(id, jsonrpc::kMethodNotFound, "method not found: " + method);
    } catch (const RpcError& e) {
        return jsonrpc::make_error(id, e.code(), e.what());
    }
}

void serve_stdio(MockToolServer& server, std::istream& in, std::ostream& out)
{
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        Json request = Json::parse(line, nullptr, false);
        Json response;
        if (request.is_discarded())
            response = jsonrpc::make_error(Json(), jsonrpc::kParseError, "parse error");
        else
            response = server.handle(request);
        if (response.is_null())
            continue;
        out << response.dump() << '\n';
        out.flush();
    }
}

} // namespace agentbench
