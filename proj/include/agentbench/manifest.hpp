#pragma once

#include "agentbench/json.hpp"
#include "agentbench/registry.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace agentbench {

enum class TransportKind { stdio, http };
enum class FailurePolicy { abort, skip };

struct ServerManifest {
    std::string server_id;
    TransportKind transport = TransportKind::stdio;
    /// Command line for stdio, URL for http.
    std::string endpoint;
    FailurePolicy failure_policy = FailurePolicy::abort;
    SeparatorPolicy naming = SeparatorPolicy::qualify;

    /// Throws InvalidName / std::invalid_argument.
    void validate() const;

    static ServerManifest from_json(const Json& object);
    Json to_json() const;
};

/// A JSON array of manifest objects, or {"servers": [...]}.
std::vector<ServerManifest> parse_manifests(const Json& document);
std::vector<ServerManifest> load_manifests(const std::filesystem::path& path);

} // namespace agentbench
