#pragma once

#include "agentbench/json.hpp"
#include "agentbench/registry.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace agentbench {

/// Deterministic synthetic tool schemas: multi-sentence descriptions,
/// 1-4 parameters, some with defaults. Same (count, salt) → same tools.
std::vector<ToolSchema> synthetic_tools(std::size_t count, std::string_view salt = "");

/// Native JSON-RPC tool server used as fixture and test double. Speaks the
/// `initialize`, `tools/list` and `tools/call` subset.
///
/// Toolsets: calculator (add, mul, div), kv (get, set, list_keys) and an
/// unlisted `dump` hook returning the kv state, used by final-state evaluators.
class MockToolServer {
public:
    struct Options {
        std::string label = "mock";
        bool calculator = true;
        bool kv = true;
        std::size_t synthetic = 0;
        /// Lists `sleep(ms)`, for timeout tests.
        bool sleep_tool = false;
        /// Lists `crash()`, which invokes on_crash (default: _Exit(3)).
        bool crash_tool = false;
        std::function<void()> on_crash;
    };

    MockToolServer();
    explicit MockToolServer(Options options);

    /// Response for a request object; null for notifications.
    Json handle(const Json& request);

    std::vector<ToolSchema> listed_tools() const;
    std::map<std::string, std::string> kv_state() const;

    /// Total tools/call requests served.
    std::size_t call_count() const;

private:
    Json call_tool(const std::string& name, const Json& arguments);

    Options options_;
    std::vector<ToolSchema> synthetic_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> kv_;
    std::size_t calls_ = 0;
};

/// Newline-delimited request loop; returns when `in` reaches EOF.
void serve_stdio(MockToolServer& server, std::istream& in, std::ostream& out);

} // namespace agentbench
