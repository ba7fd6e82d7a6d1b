#include "agentbench/jsonrpc.hpp"

namespace agentbench::jsonrpc {

Json make_request(std::int64_t id, std::string_view method, Json params)
{
    Json out = Json::object();
    out["jsonrpc"] = "2.0";
    out["id"] = id;
    out["method"] = method;
    out["params"] = std::move(params);
    return out;
}

Json make_result(const Json& id, Json result)
{
    Json out = Json::object();
    out["jsonrpc"] = "2.0";
    out["id"] = id;
    out["result"] = std::move(result);
    return out;
}

Json make_error(const Json& id, int code, std::string_view message)
{
    Json error = Json::object();
    error["code"] = code;
    error["message"] = message;
    Json out = Json::object();
    out["jsonrpc"] = "2.0";
    out["id"] = id;
    out["error"] = std::move(error);
    return out;
}

Json unwrap(const Json& response)
{
    if (!response.is_object() || response.value("jsonrpc", "") != "2.0")
        throw std::runtime_error("not a JSON-RPC 2.0 response");
    if (auto error = response.find("error"); error != response.end()) {
        const int code = error->value("code", kInternalError);
        throw RpcError(code, error->value("message", std::string("unspecified error")));
    }
    auto result = response.find("result");
    if (result == response.end())
        throw std::runtime_error("JSON-RPC response carries neither result nor error");
    return *result;
}

Json text_result(std::string_view text, bool is_error)
{
    Json block = Json::object();
    block["type"] = "text";
    block["text"] = text;
    Json out = Json::object();
    out["content"] = Json::array({std::move(block)});
    out["isError"] = is_error;
    return out;
}

} // namespace agentbench::jsonrpc
