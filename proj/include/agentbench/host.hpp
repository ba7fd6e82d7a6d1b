#pragma once

#include "agentbench/json.hpp"
#include "agentbench/manifest.hpp"
#include "agentbench/registry.hpp"
#include "agentbench/transport.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace agentbench {

class ConnectFailed : public std::runtime_error {
public:
    ConnectFailed(std::string server_id, const std::string& reason)
        : std::runtime_error("server '" + server_id + "': " + reason), server_id_(std::move(server_id))
    {
    }
    const std::string& server_id() const noexcept { return server_id_; }

private:
    std::string server_id_;
};

struct HostOptions {
    std::chrono::milliseconds call_timeout{60'000};
    std::chrono::milliseconds connect_timeout{10'000};
    /// Maximum characters of tool output, truncation marker included.
    std::size_t output_cap = 32'768;
};

inline constexpr std::string_view kTruncationMarker = "\n[output truncated]";

enum class SessionState { connecting, ready, failed, closed };

std::string_view to_string(SessionState state);

/// One connected tool server. Calls are serialized per session.
class ServerSession {
public:
    ServerSession(std::string server_id, std::unique_ptr<Transport> transport);
    ~ServerSession();

    ServerSession(const ServerSession&) = delete;
    ServerSession& operator=(const ServerSession&) = delete;

    /// `initialize` then `tools/list`. Throws ConnectFailed and leaves the session failed.
    void connect(std::chrono::milliseconds timeout);

    /// Raw JSON-RPC call; returns the `result` member. Throws TransportError,
    /// TransportTimeout, jsonrpc::RpcError, or std::logic_error when not ready.
    Json call(std::string_view method, Json params, std::chrono::milliseconds timeout);

    SessionState state() const noexcept { return state_.load(); }
    const std::string& server_id() const noexcept { return server_id_; }
    const std::vector<ToolSchema>& discovered_tools() const noexcept { return tools_; }
    const Transport& transport() const noexcept { return *transport_; }

    /// Idempotent.
    void close() noexcept;

private:
    Json exchange(std::string_view method, Json params, std::chrono::milliseconds timeout);

    std::string server_id_;
    std::unique_ptr<Transport> transport_;
    std::atomic<SessionState> state_{SessionState::connecting};
    std::vector<ToolSchema> tools_;
    std::mutex call_mutex_;
    std::int64_t next_id_ = 1;
};

using TransportFactory = std::function<std::unique_ptr<Transport>(const ServerManifest&)>;

/// stdio → StdioTransport, http → HttpTransport.
std::unique_ptr<Transport> make_transport(const ServerManifest& manifest);

/// Connects and discovers. Throws ConnectFailed regardless of failure policy.
std::unique_ptr<ServerSession> connect_server(const ServerManifest& manifest, const HostOptions& options = {},
                                              const TransportFactory& factory = make_transport);

enum class ToolStatus { ok, error };

struct ToolResult {
    std::string qualified_name;
    std::string server_id;
    ToolStatus status = ToolStatus::ok;
    std::vector<std::string> content;
    std::chrono::microseconds latency{0};
    bool truncated = false;

    bool ok() const noexcept { return status == ToolStatus::ok; }
    /// Blocks joined with newlines.
    std::string text() const;
    std::size_t content_size() const;
};

struct ServerFailure {
    std::string server_id;
    std::string reason;
};

struct HostReport {
    std::vector<std::string> ready;
    std::vector<ServerFailure> skipped;
};

/// Single interaction surface for agents: owns every server session and the
/// global registry, and routes calls by qualified name. Thread-safe for dispatch.
class Host {
public:
    /// Connects every manifest up front. A failure under `abort` closes what
    /// was opened and throws ConnectFailed; under `skip` it is recorded in report().
    static std::unique_ptr<Host> broadcast_connect(std::span<const ServerManifest> manifests, HostOptions options = {},
                                                   const TransportFactory& factory = make_transport);

    ~Host();
    Host(const Host&) = delete;
    Host& operator=(const Host&) = delete;

    /// Never throws for tool-side problems: unknown names, timeouts, transport
    /// failures and server errors all come back as status=error results.
    ToolResult dispatch_tool_call(std::string_view qualified_name, const Json& arguments);

    /// Calls a tool on a server by its own name, bypassing the registry. Used by
    /// evaluators that delegate to a server hook (e.g. a final-state dump).
    ToolResult call_server_tool(std::string_view server_id, std::string_view tool_name, const Json& arguments);

    /// Closes every session. Idempotent; later dispatches return SessionClosed errors.
    void shutdown() noexcept;

    const ToolRegistry& registry() const noexcept { return *registry_; }
    std::shared_ptr<const ToolRegistry> shared_registry() const noexcept { return registry_; }
    const HostReport& report() const noexcept { return report_; }
    const HostOptions& options() const noexcept { return options_; }
    const ServerSession* session(std::string_view server_id) const;
    bool is_shut_down() const noexcept { return shut_down_.load(); }

private:
    Host(HostOptions options, std::vector<std::unique_ptr<ServerSession>> sessions,
         std::shared_ptr<const ToolRegistry> registry, HostReport report);

    ServerSession* find_session(std::string_view server_id);
    ToolResult invoke(ServerSession& session, std::string qualified_name, std::string_view tool_name, const Json& arguments);
    ToolResult finish(ToolResult result) const;

    HostOptions options_;
    std::vector<std::unique_ptr<ServerSession>> sessions_;
    std::shared_ptr<const ToolRegistry> registry_;
    HostReport report_;
    std::atomic<bool> shut_down_{false};
};

} // namespace agentbench
