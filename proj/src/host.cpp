#include "agentbench/host.hpp"

#include "agentbench/jsonrpc.hpp"
#include "agentbench/text.hpp"

#include <algorithm>
#include <future>
#include <optional>
#include <utility>
#include <iostream>
#include <numeric>

namespace agentbench {

namespace {

ToolResult error_result(std::string qualified_name, std::string server_id, std::string message)
{
    ToolResult result;
    result.qualified_name = std::move(qualified_name);
    result.server_id = std::move(server_id);
    result.status = ToolStatus::error;
    result.content.push_back(std::move(message));
    return result;
}

std::vector<std::string> content_blocks(const Json& result)
{
    std::vector<std::string> blocks;
    auto content = result.find("content");
    if (content == result.end() || !content->is_array())
        return blocks;
    for (const auto& block : *content) {
        if (block.is_object() && block.value("type", "") == "text" && block.contains("text") && block["text"].is_string())
            blocks.push_back(block["text"].get<std::string>());
        else
            blocks.push_back(block.dump());
    }
    return blocks;
}

} // namespace

std::string_view to_string(SessionState state)
{
    switch (state) {
    case SessionState::connecting:
        return "connecting";
    case SessionState::ready:
        return "ready";
    case SessionState::failed:
        return "failed";
    case SessionState::closed:
        return "closed";
    }
    return "unknown";
}

// --- ServerSession -------------------------------------------------------------

ServerSession::ServerSession(std::string server_id, std::unique_ptr<Transport> transport)
    : server_id_(std::move(server_id)), transport_(std::move(transport))
{
}

ServerSession::~ServerSession()
{
    close();
}

Json ServerSession::exchange(std::string_view method, Json params, std::chrono::milliseconds timeout)
{
    std::lock_guard lock(call_mutex_);
    const auto request = jsonrpc::make_request(next_id_++, method, std::move(params));
    return jsonrpc::unwrap(transport_->round_trip(request, timeout));
}

void ServerSession::connect(std::chrono::milliseconds timeout)
{
    if (state_.load() != SessionState::connecting)
        throw ConnectFailed(server_id_, "session already " + std::string(to_string(state_.load())));
    try {
        Json init_params = Json::object();
        init_params["protocolVersion"] = jsonrpc::kProtocolVersion;
        init_params["capabilities"] = Json::object();
        init_params["clientInfo"] = Json{{"name", "agentbench"}, {"version", "1.0.0"}};
        const auto init = exchange("initialize", std::move(init_params), timeout);
        if (!init.is_object())
            throw std::runtime_error("initialize returned a non-object result");

        const auto listing = exchange("tools/list", Json::object(), timeout);
        if (!listing.is_object() || !listing.contains("tools") || !listing["tools"].is_array())
            throw std::runtime_error("tools/list returned no tool array");
        std::vector<ToolSchema> tools;
        for (const auto& tool : listing["tools"])
            tools.push_back(ToolSchema::from_mcp(tool));
        tools_ = std::move(tools);
    } catch (const std::exception& e) {
        SessionState expected = SessionState::connecting;
        state_.compare_exchange_strong(expected, SessionState::failed);
        throw ConnectFailed(server_id_, e.what());
    }
    SessionState expected = SessionState::connecting;
    if (!state_.compare_exchange_strong(expected, SessionState::ready))
        throw ConnectFailed(server_id_, "session closed during handshake");
}

Json ServerSession::call(std::string_view method, Json params, std::chrono::milliseconds timeout)
{
    if (state_.load() != SessionState::ready)
        throw std::logic_error("session '" + server_id_ + "' is " + std::string(to_string(state_.load())));
    return exchange(method, std::move(params), timeout);
}

void ServerSession::close() noexcept
{
    state_.store(SessionState::closed);
    std::lock_guard lock(call_mutex_);
    if (transport_)
        transport_->close();
}

// --- connection ----------------------------------------------------------------

std::unique_ptr<Transport> make_transport(const ServerManifest& manifest)
{
    switch (manifest.transport) {
    case TransportKind::stdio:
        return std::make_unique<StdioTransport>(manifest.endpoint);
    case TransportKind::http:
        return std::make_unique<HttpTransport>(manifest.endpoint);
    }
    throw std::invalid_argument("unknown transport");
}

std::unique_ptr<ServerSession> connect_server(const ServerManifest& manifest, const HostOptions& options,
                                              const TransportFactory& factory)
{
    std::unique_ptr<Transport> transport;
    try {
        manifest.validate();
        transport = factory(manifest);
    } catch (const std::exception& e) {
        throw ConnectFailed(manifest.server_id, e.what());
    }
    auto session = std::make_unique<ServerSession>(manifest.server_id, std::move(transport));
    session->connect(options.connect_timeout);
    return session;
}

// --- ToolResult ----------------------------------------------------------------

std::string ToolResult::text() const
{
    std::string out;
    for (std::size_t i = 0; i < content.size(); ++i) {
        if (i > 0)
            out += '\n';
        out += content[i];
    }
    return out;
}

std::size_t ToolResult::content_size() const
{
    return std::accumulate(content.begin(), content.end(), std::size_t{0},
                           [](std::size_t acc, const std::string& block) { return acc + block.size(); });
}

// --- Host ----------------------------------------------------------------------

Host::Host(HostOptions options, std::vector<std::unique_ptr<ServerSession>> sessions,
           std::shared_ptr<const ToolRegistry> registry, HostReport report)
    : options_(options), sessions_(std::move(sessions)), registry_(std::move(registry)), report_(std::move(report))
{
}

Host::~Host()
{
    shutdown();
}

std::unique_ptr<Host> Host::broadcast_connect(std::span<const ServerManifest> manifests, HostOptions options,
                                              const TransportFactory& factory)
{
    // Every server is brought up before the first task starts.
    std::vector<std::future<std::unique_ptr<ServerSession>>> pending;
    pending.reserve(manifests.size());
    for (const auto& manifest : manifests) {
        pending.push_back(std::async(std::launch::async,
                                     [&manifest, &options, &factory] { return connect_server(manifest, options, factory); }));
    }

    std::vector<std::unique_ptr<ServerSession>> sessions;
    HostReport report;
    std::optional<ConnectFailed> abort_error;
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        try {
            sessions.push_back(pending[i].get());
            report.ready.push_back(manifests[i].server_id);
        } catch (const ConnectFailed& e) {
            if (manifests[i].failure_policy == FailurePolicy::abort) {
                if (!abort_error)
                    abort_error.emplace(e);
            } else {
                std::cerr << "[host] skipping " << e.what() << "\n";
                report.skipped.push_back({manifests[i].server_id, e.what()});
            }
        }
    }
    if (abort_error) {
        for (auto& session : sessions)
            session->close();
        throw *abort_error;
    }

    RegistryBuilder builder;
    try {
        for (const auto& session : sessions) {
            const auto& manifest = *std::find_if(manifests.begin(), manifests.end(),
                                                 [&](const ServerManifest& m) { return m.server_id == session->server_id(); });
            builder.add_server(session->server_id());
            builder.register_server_tools(session->server_id(), session->discovered_tools(), manifest.naming);
        }
    } catch (...) {
        for (auto& session : sessions)
            session->close();
        throw;
    }

    auto registry = std::make_shared<const ToolRegistry>(std::move(builder).build());
    return std::unique_ptr<Host>(new Host(options, std::move(sessions), std::move(registry), std::move(report)));
}

const ServerSession* Host::session(std::string_view server_id) const
{
    for (const auto& session : sessions_) {
        if (session->server_id() == server_id)
            return session.get();
    }
    return nullptr;
}

ServerSession* Host::find_session(std::string_view server_id)
{
    return const_cast<ServerSession*>(std::as_const(*this).session(server_id));
}

ToolResult Host::dispatch_tool_call(std::string_view qualified_name, const Json& arguments)
{
    const auto start = std::chrono::steady_clock::now();
    auto stamp = [&](ToolResult result) {
        result.latency = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
        return result;
    };

    const auto* entry = registry_->find(qualified_name);
    if (entry == nullptr)
        return stamp(error_result(std::string(qualified_name), "", "UnknownTool: no tool named '" + std::string(qualified_name) + "'"));
    if (shut_down_.load())
        return stamp(error_result(entry->qualified_name, entry->server_id, "SessionClosed: host has been shut down"));
    auto* session = find_session(entry->server_id);
    if (session == nullptr)
        return stamp(error_result(entry->qualified_name, entry->server_id, "SessionClosed: no session for server"));
    return stamp(invoke(*session, entry->qualified_name, entry->original_name, arguments));
}

ToolResult Host::call_server_tool(std::string_view server_id, std::string_view tool_name, const Json& arguments)
{
    const auto start = std::chrono::steady_clock::now();
    const auto qualified = std::string(server_id) + std::string(kQualifierSeparator) + std::string(tool_name);
    ToolResult result;
    if (shut_down_.load()) {
        result = error_result(qualified, std::string(server_id), "SessionClosed: host has been shut down");
    } else if (auto* session = find_session(server_id); session == nullptr) {
        result = error_result(qualified, std::string(server_id), "unknown server '" + std::string(server_id) + "'");
    } else {
        result = invoke(*session, qualified, tool_name, arguments);
    }
    result.latency = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
    return result;
}

ToolResult Host::invoke(ServerSession& session, std::string qualified_name, std::string_view tool_name, const Json& arguments)
{
    const auto& server_id = session.server_id();
    if (!arguments.is_object())
        return error_result(std::move(qualified_name), server_id, "invalid arguments: expected a JSON object");
    if (session.state() != SessionState::ready)
        return error_result(std::move(qualified_name), server_id,
                            "SessionClosed: server session is " + std::string(to_string(session.state())));

    Json params = Json::object();
    params["name"] = tool_name;
    params["arguments"] = arguments;

    // One retry for transport failures only; tool errors are the agent's signal.
    for (int attempt = 0;; ++attempt) {
        try {
            const auto result = session.call("tools/call", params, options_.call_timeout);
            ToolResult out;
            out.qualified_name = qualified_name;
            out.server_id = server_id;
            out.content = content_blocks(result);
            out.status = result.value("isError", false) ? ToolStatus::error : ToolStatus::ok;
            if (out.status == ToolStatus::error && out.content.empty())
                out.content.push_back("tool reported an error without a message");
            return finish(std::move(out));
        } catch (const TransportTimeout& e) {
            return error_result(std::move(qualified_name), server_id,
                                "timeout after " + std::to_string(options_.call_timeout.count()) + " ms: " + e.what());
        } catch (const jsonrpc::RpcError& e) {
            return finish(error_result(std::move(qualified_name), server_id, e.what()));
        } catch (const std::logic_error& e) {
            return error_result(std::move(qualified_name), server_id, std::string("SessionClosed: ") + e.what());
        } catch (const std::exception& e) {
            if (attempt == 0)
                continue;
            return error_result(std::move(qualified_name), server_id, std::string("transport failure: ") + e.what());
        }
    }
}

ToolResult Host::finish(ToolResult result) const
{
    const std::size_t cap = options_.output_cap;
    if (result.content_size() <= cap)
        return result;

    const std::string_view marker = kTruncationMarker.size() <= cap ? kTruncationMarker : kTruncationMarker.substr(0, cap);
    const std::size_t budget = cap - marker.size();
    std::vector<std::string> kept;
    std::size_t used = 0;
    for (auto& block : result.content) {
        if (used + block.size() <= budget) {
            used += block.size();
            kept.push_back(std::move(block));
            continue;
        }
        const std::size_t room = budget - used;
        std::string piece(utf8_prefix(block, room));
        // Pad when the cut had to back off from a multi-byte sequence.
        piece.append(room - piece.size(), ' ');
        kept.push_back(std::move(piece));
        break;
    }
    if (kept.empty())
        kept.emplace_back();
    kept.back() += marker;
    result.content = std::move(kept);
    result.truncated = true;
    return result;
}

void Host::shutdown() noexcept
{
    if (shut_down_.exchange(true))
        return;
    for (auto& session : sessions_) {
        try {
            session->close();
        } catch (const std::exception& e) {
            std::cerr << "[host] close failed for " << session->server_id() << ": " << e.what() << "\n";
        }
    }
}

} // namespace agentbench
