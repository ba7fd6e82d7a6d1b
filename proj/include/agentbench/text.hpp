#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace agentbench {

/// Longest prefix of `text` that is at most `max_bytes` long and does not
/// split a UTF-8 sequence.
std::string_view utf8_prefix(std::string_view text, std::size_t max_bytes);

std::string_view trim(std::string_view text);

std::string to_lower(std::string_view text);

/// 64-bit FNV-1a. Stable across platforms, used wherever a seed is derived from text.
std::uint64_t fnv1a(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// SplitMix64 step; mixes a seed with a stream index.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Shortest round-trip decimal form; integral values print without a fraction.
std::string format_number(double value);

/// Fixed-point formatting with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

} // namespace agentbench
