#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace agentbench::prompts {

// Defaults are compiled in from the files under prompts/.
std::string_view universal_agent();
std::string_view pointwise_judge();
std::string_view pairwise_judge();
std::string_view continuation();
std::string_view forced_final();

/// Universal prompt, with a policy document appended under a Policy section when non-empty.
std::string agent_system_prompt(std::string_view base, std::string_view policy);

/// Replaces every `{{key}}` occurrence.
std::string fill(std::string_view templ, std::string_view key, std::string_view value);

std::string read_file(const std::filesystem::path& path);

} // namespace agentbench::prompts
