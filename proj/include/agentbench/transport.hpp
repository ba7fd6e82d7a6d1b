#pragma once

#include "agentbench/json.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <sys/types.h>

namespace agentbench {

/// The channel itself failed (process died, connection refused, garbage on the wire).
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TransportTimeout : public TransportError {
public:
    using TransportError::TransportError;
};

/// One request in, one response out. Implementations are not required to be
/// thread-safe; ServerSession serializes access.
class Transport {
public:
    virtual ~Transport() = default;
    virtual Json round_trip(const Json& request, std::chrono::milliseconds timeout) = 0;
    /// Idempotent; never throws.
    virtual void close() noexcept = 0;
    virtual std::string describe() const = 0;
};

/// Child process speaking newline-delimited JSON-RPC on stdin/stdout. The
/// command line is run through /bin/sh with `exec`, so the child is the tool
/// server itself.
class StdioTransport final : public Transport {
public:
    explicit StdioTransport(std::string command_line);
    ~StdioTransport() override;

    StdioTransport(const StdioTransport&) = delete;
    StdioTransport& operator=(const StdioTransport&) = delete;

    Json round_trip(const Json& request, std::chrono::milliseconds timeout) override;
    void close() noexcept override;
    std::string describe() const override { return "stdio:" + command_line_; }

    /// -1 once reaped.
    pid_t pid() const noexcept { return pid_; }

private:
    void write_line(const std::string& line);
    std::string read_line(std::chrono::steady_clock::time_point deadline);

    std::string command_line_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

/// One POST per request to the manifest URL.
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(std::string url);
    ~HttpTransport() override;

    Json round_trip(const Json& request, std::chrono::milliseconds timeout) override;
    void close() noexcept override;
    std::string describe() const override { return "http:" + url_; }

private:
    std::string url_;
    std::string origin_;
    std::string path_;
    bool closed_ = false;
};

/// Calls a handler directly; used for native mocks and tests.
class InProcessTransport final : public Transport {
public:
    using Handler = std::function<Json(const Json&)>;
    explicit InProcessTransport(Handler handler, std::string label = "inproc");

    Json round_trip(const Json& request, std::chrono::milliseconds timeout) override;
    void close() noexcept override { closed_ = true; }
    std::string describe() const override { return label_; }

private:
    Handler handler_;
    std::string label_;
    bool closed_ = false;
};

} // namespace agentbench
