#include "agentbench/manifest.hpp"

#include <fstream>
#include <stdexcept>

namespace agentbench {

void ServerManifest::validate() const
{
    if (!is_valid_name(server_id))
        throw InvalidName("invalid server id: '" + server_id + "'");
    if (endpoint.empty())
        throw std::invalid_argument("server '" + server_id + "': empty endpoint");
}

ServerManifest ServerManifest::from_json(const Json& object)
{
    if (!object.is_object())
        throw std::invalid_argument("server manifest must be an object");
    ServerManifest m;
    m.server_id = object.value("server_id", std::string{});
    m.endpoint = object.value("endpoint", std::string{});

    const auto transport = object.value("transport", std::string("stdio"));
    if (transport == "stdio")
        m.transport = TransportKind::stdio;
    else if (transport == "http")
        m.transport = TransportKind::http;
    else
        throw std::invalid_argument("server '" + m.server_id + "': unknown transport '" + transport + "'");

    const auto policy = object.value("failure_policy", std::string("abort"));
    if (policy == "abort")
        m.failure_policy = FailurePolicy::abort;
    else if (policy == "skip")
        m.failure_policy = FailurePolicy::skip;
    else
        throw std::invalid_argument("server '" + m.server_id + "': unknown failure_policy '" + policy + "'");

    const auto naming = object.value("naming", std::string("qualify"));
    if (naming == "qualify")
        m.naming = SeparatorPolicy::qualify;
    else if (naming == "verbatim")
        m.naming = SeparatorPolicy::verbatim;
    else
        throw std::invalid_argument("server '" + m.server_id + "': unknown naming '" + naming + "'");

    m.validate();
    return m;
}

Json ServerManifest::to_json() const
{
    Json out = Json::object();
    out["server_id"] = server_id;
    out["transport"] = transport == TransportKind::stdio ? "stdio" : "http";
    out["endpoint"] = endpoint;
    out["failure_policy"] = failure_policy == FailurePolicy::abort ? "abort" : "skip";
    out["naming"] = naming == SeparatorPolicy::qualify ? "qualify" : "verbatim";
    return out;
}

std::vector<ServerManifest> parse_manifests(const Json& document)
{
    const Json* list = &document;
    if (document.is_object() && document.contains("servers"))
        list = &document["servers"];
    if (!list->is_array())
        throw std::invalid_argument("server manifest file must hold an array of servers");
    std::vector<ServerManifest> out;
    for (const auto& item : *list)
        out.push_back(ServerManifest::from_json(item));
    return out;
}

std::vector<ServerManifest> load_manifests(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open server manifest: " + path.string());
    return parse_manifests(Json::parse(in));
}

} // namespace agentbench
