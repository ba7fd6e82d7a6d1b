// Fixture tool server. Speaks newline-delimited JSON-RPC on stdin/stdout, or
// JSON-RPC over HTTP POST when --http is given.
#include "agentbench/mock_server.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"agentbench fixture tool server"};
    std::string toolset = "calculator,kv";
    std::size_t synthetic = 0;
    std::string label = "mock";
    bool sleep_tool = false;
    bool crash_tool = false;
    int http_port = -1;
    app.add_option("--toolset", toolset, "Comma-separated subset of calculator,kv (or none)");
    app.add_option("--synthetic", synthetic, "Number of synthetic tools to list");
    app.add_option("--label", label, "Label used in synthetic tool output and as salt for their names");
    app.add_flag("--sleep", sleep_tool, "List sleep(ms)");
    app.add_flag("--crash", crash_tool, "List crash(), which exits the process");
    app.add_option("--http", http_port, "Serve HTTP on 127.0.0.1:PORT instead of stdio (0 picks a port)");
    CLI11_PARSE(app, argc, argv);

    agentbench::MockToolServer::Options options;
    options.label = label;
    options.calculator = toolset.find("calculator") != std::string::npos;
    options.kv = toolset.find("kv") != std::string::npos;
    options.synthetic = synthetic;
    options.sleep_tool = sleep_tool;
    options.crash_tool = crash_tool;
    agentbench::MockToolServer server(options);

    if (http_port < 0) {
        std::ios::sync_with_stdio(false);
        agentbench::serve_stdio(server, std::cin, std::cout);
        return 0;
    }

    httplib::Server http;
    http.Post("/", [&server](const httplib::Request& req, httplib::Response& res) {
        agentbench::Json response;
        try {
            response = server.handle(agentbench::Json::parse(req.body));
        } catch (const agentbench::Json::parse_error&) {
            response = {{"jsonrpc", "2.0"}, {"id", nullptr}, {"error", {{"code", -32700}, {"message", "parse error"}}}};
        }
        if (response.is_null()) {
            res.status = 204;
            return;
        }
        res.set_content(response.dump(), "application/json");
    });
    const int port = http_port == 0 ? http.bind_to_any_port("127.0.0.1") : (http.bind_to_port("127.0.0.1", http_port) ? http_port : -1);
    if (port < 0) {
        std::cerr << "cannot bind 127.0.0.1:" << http_port << '\n';
        return 1;
    }
    // Parent processes read the chosen port from the first stdout line.
    std::cout << port << std::endl;
    http.listen_after_bind();
    return 0;
}
