#pragma once

#include <json.hpp>

namespace agentbench {

// Insertion-ordered so wire messages and rendered schemas keep their field order.
using Json = nlohmann::ordered_json;

} // namespace agentbench
