#pragma once

#include <cstdint>
#include <stdexcept>

namespace agentbench {

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidConfig : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TokenUsage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    /// True when any part came from the tokenizer proxy rather than the provider.
    bool estimated = false;

    TokenUsage& operator+=(const TokenUsage& other) noexcept
    {
        input_tokens += other.input_tokens;
        output_tokens += other.output_tokens;
        estimated = estimated || other.estimated;
        return *this;
    }

    friend TokenUsage operator+(TokenUsage a, const TokenUsage& b) noexcept { return a += b; }
    bool operator==(const TokenUsage&) const = default;
};

} // namespace agentbench
