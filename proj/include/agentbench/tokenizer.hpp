#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace agentbench {

/// Token counting backend. Counts are only ever compared within one backend.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::int64_t count(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

/// ceil(bytes / 4). The default everywhere a provider tokenizer is unavailable.
class CharProxyTokenizer final : public Tokenizer {
public:
    std::int64_t count(std::string_view text) const override;
    std::string name() const override { return "chars/4"; }
};

/// Counts pieces produced by a cl100k-style pre-tokenizer: contractions,
/// letter runs with an optional leading space, digit groups of at most three,
/// punctuation runs and whitespace runs. Letter runs longer than eight bytes
/// are charged one extra piece per further six bytes, approximating BPE
/// splits of rare words.
class PretokenTokenizer final : public Tokenizer {
public:
    std::int64_t count(std::string_view text) const override;
    std::string name() const override { return "pretoken"; }
};

const Tokenizer& default_tokenizer();

} // namespace agentbench
