#pragma once

#include "agentbench/json.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace agentbench::jsonrpc {

inline constexpr int kParseError = -32700;
inline constexpr int kInvalidRequest = -32600;
inline constexpr int kMethodNotFound = -32601;
inline constexpr int kInvalidParams = -32602;
inline constexpr int kInternalError = -32603;

inline constexpr std::string_view kProtocolVersion = "2024-11-05";

/// An `error` member in a response.
class RpcError : public std::runtime_error {
public:
    RpcError(int code, const std::string& message)
        : std::runtime_error(message), code_(code)
    {
    }
    int code() const noexcept { return code_; }

private:
    int code_;
};

Json make_request(std::int64_t id, std::string_view method, Json params);
Json make_result(const Json& id, Json result);
Json make_error(const Json& id, int code, std::string_view message);

/// Returns the `result` member; throws RpcError for error responses and
/// std::runtime_error when the object is not a JSON-RPC 2.0 response.
Json unwrap(const Json& response);

/// Builds a `tools/call` result with a single text block.
Json text_result(std::string_view text, bool is_error);

} // namespace agentbench::jsonrpc
