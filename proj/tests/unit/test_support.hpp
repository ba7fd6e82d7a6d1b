#pragma once

#include "agentbench/json.hpp"
#include "agentbench/prompts.hpp"

#include <filesystem>
#include <string>

namespace test_support {

inline std::filesystem::path source_dir()
{
    return AGENTBENCH_SOURCE_DIR;
}

inline agentbench::Json load_json(const std::string& relative)
{
    return agentbench::Json::parse(agentbench::prompts::read_file(source_dir() / relative));
}

} // namespace test_support

#include "agentbench/host.hpp"
#include "agentbench/mock_server.hpp"

#include <map>
#include <memory>

namespace test_support {

/// Host over fresh in-process mocks: "calc" (calculator) and "kv" (kv store).
inline std::shared_ptr<agentbench::Host> inproc_host(agentbench::HostOptions options = {})
{
    using namespace agentbench;
    std::vector<ServerManifest> manifests(2);
    manifests[0].server_id = "calc";
    manifests[0].endpoint = "inproc";
    manifests[1].server_id = "kv";
    manifests[1].endpoint = "inproc";
    TransportFactory factory = [](const ServerManifest& m) {
        MockToolServer::Options opts;
        opts.label = m.server_id;
        opts.calculator = m.server_id == "calc";
        opts.kv = m.server_id == "kv";
        auto server = std::make_shared<MockToolServer>(opts);
        return std::make_unique<InProcessTransport>([server](const Json& req) { return server->handle(req); }, m.server_id);
    };
    return std::shared_ptr<Host>(Host::broadcast_connect(manifests, options, factory));
}

} // namespace test_support
