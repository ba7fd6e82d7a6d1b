#include "agentbench/transport.hpp"

#include <httplib.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

extern char** environ;

namespace agentbench {

namespace {

void ignore_sigpipe()
{
    static std::once_flag once;
    std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

std::string errno_text(std::string_view what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

bool wait_for_exit(pid_t pid, std::chrono::milliseconds budget)
{
    const auto deadline = std::chrono::steady_clock::now() + budget;
    while (true) {
        int status = 0;
        const pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid || (r < 0 && errno == ECHILD))
            return true;
        if (std::chrono::steady_clock::now() >= deadline)
            return false;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

bool same_id(const Json& a, const Json& b)
{
    return a == b;
}

} // namespace

// --- stdio -------------------------------------------------------------------

StdioTransport::StdioTransport(std::string command_line)
    : command_line_(std::move(command_line))
{
    ignore_sigpipe();

    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0)
        throw TransportError(errno_text("pipe"));
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw TransportError(errno_text("pipe"));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

    std::string script = "exec " + command_line_;
    char sh[] = "/bin/sh";
    char dash_c[] = "-c";
    char* argv[] = {sh, dash_c, script.data(), nullptr};

    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
        ::close(to_child[1]);
        ::close(from_child[0]);
        pid_ = -1;
        throw TransportError("spawn failed for '" + command_line_ + "': " + std::strerror(rc));
    }
    to_child_ = to_child[1];
    from_child_ = from_child[0];
}

StdioTransport::~StdioTransport()
{
    close();
}

void StdioTransport::write_line(const std::string& line)
{
    if (to_child_ < 0)
        throw TransportError("stdio transport closed");
    std::size_t written = 0;
    while (written < line.size()) {
        const ssize_t n = ::write(to_child_, line.data() + written, line.size() - written);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw TransportError(errno_text("write to '" + command_line_ + "'"));
        }
        written += static_cast<std::size_t>(n);
    }
}

std::string StdioTransport::read_line(std::chrono::steady_clock::time_point deadline)
{
    while (true) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        if (from_child_ < 0)
            throw TransportError("stdio transport closed");

        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0)
            throw TransportTimeout("timed out waiting for '" + command_line_ + "'");

        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1 << 30)));
        if (ready < 0) {
            if (errno == EINTR)
                continue;
            throw TransportError(errno_text("poll"));
        }
        if (ready == 0)
            throw TransportTimeout("timed out waiting for '" + command_line_ + "'");

        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN)
                continue;
            throw TransportError(errno_text("read from '" + command_line_ + "'"));
        }
        if (n == 0)
            throw TransportError("server '" + command_line_ + "' closed its output");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

Json StdioTransport::round_trip(const Json& request, std::chrono::milliseconds timeout)
{
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    write_line(request.dump() + "\n");

    const Json& id = request.contains("id") ? request["id"] : Json();
    while (true) {
        const auto line = read_line(deadline);
        if (line.empty())
            continue;
        Json message = Json::parse(line, nullptr, false);
        if (message.is_discarded() || !message.is_object())
            continue;
        // Late replies to requests that already timed out are dropped here.
        if (message.contains("id") && same_id(message["id"], id))
            return message;
    }
}

void StdioTransport::close() noexcept
{
    if (to_child_ >= 0) {
        ::close(to_child_);
        to_child_ = -1;
    }
    if (pid_ > 0) {
        // EOF on stdin is the polite shutdown signal; escalate if ignored.
        if (!wait_for_exit(pid_, std::chrono::milliseconds(1000))) {
            ::kill(pid_, SIGTERM);
            if (!wait_for_exit(pid_, std::chrono::milliseconds(1000))) {
                ::kill(pid_, SIGKILL);
                int status = 0;
                ::waitpid(pid_, &status, 0);
            }
        }
        pid_ = -1;
    }
    if (from_child_ >= 0) {
        ::close(from_child_);
        from_child_ = -1;
    }
}

// --- http --------------------------------------------------------------------

HttpTransport::HttpTransport(std::string url)
    : url_(std::move(url))
{
    const auto scheme = url_.find("://");
    if (scheme == std::string::npos || url_.substr(0, scheme) != "http")
        throw TransportError("unsupported URL '" + url_ + "' (only http:// is supported)");
    const auto path_start = url_.find('/', scheme + 3);
    origin_ = path_start == std::string::npos ? url_ : url_.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url_.substr(path_start);
}

HttpTransport::~HttpTransport() = default;

Json HttpTransport::round_trip(const Json& request, std::chrono::milliseconds timeout)
{
    if (closed_)
        throw TransportError("http transport closed");

    httplib::Client client(origin_);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    auto response = client.Post(path_, request.dump(), "application/json");
    if (!response) {
        const auto error = response.error();
        if (error == httplib::Error::Read || error == httplib::Error::ConnectionTimeout)
            throw TransportTimeout("http " + url_ + ": " + httplib::to_string(error));
        throw TransportError("http " + url_ + ": " + httplib::to_string(error));
    }
    if (response->status != 200)
        throw TransportError("http " + url_ + ": status " + std::to_string(response->status));
    Json message = Json::parse(response->body, nullptr, false);
    if (message.is_discarded())
        throw TransportError("http " + url_ + ": response is not JSON");
    return message;
}

void HttpTransport::close() noexcept
{
    closed_ = true;
}

// --- in-process --------------------------------------------------------------

InProcessTransport::InProcessTransport(Handler handler, std::string label)
    : handler_(std::move(handler)), label_(std::move(label))
{
}

Json InProcessTransport::round_trip(const Json& request, std::chrono::milliseconds timeout)
{
    if (closed_)
        throw TransportError(label_ + ": transport closed");
    // The handler runs on the caller's thread, so a timeout can only be
    // detected after the fact; the late result is discarded like a late stdio reply.
    const auto start = std::chrono::steady_clock::now();
    Json response = handler_(request);
    if (std::chrono::steady_clock::now() - start > timeout)
        throw TransportTimeout(label_ + ": call exceeded timeout");
    return response;
}

} // namespace agentbench
