#include "agentbench/tokenizer.hpp"

#include <cctype>

namespace agentbench {

namespace {

enum class CharClass { letter, digit, space, newline, other };

CharClass classify(unsigned char c)
{
    if (c >= 0x80 || std::isalpha(c))
        return CharClass::letter;
    if (std::isdigit(c))
        return CharClass::digit;
    if (c == '\n' || c == '\r')
        return CharClass::newline;
    if (std::isspace(c))
        return CharClass::space;
    return CharClass::other;
}

bool is_contraction(std::string_view rest)
{
    for (std::string_view suffix : {"'s", "'t", "'re", "'ve", "'m", "'ll", "'d"}) {
        if (rest.substr(0, suffix.size()) == suffix
            && (rest.size() == suffix.size() || classify(static_cast<unsigned char>(rest[suffix.size()])) != CharClass::letter))
            return true;
    }
    return false;
}

} // namespace

std::int64_t CharProxyTokenizer::count(std::string_view text) const
{
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::int64_t PretokenTokenizer::count(std::string_view text) const
{
    std::int64_t pieces = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto cls = [&](std::size_t at) { return classify(static_cast<unsigned char>(text[at])); };

    while (i < n) {
        if (text[i] == '\'' && is_contraction(text.substr(i))) {
            std::size_t len = 2;
            while (i + len < n && cls(i + len) == CharClass::letter)
                ++len;
            i += len;
            ++pieces;
            continue;
        }
        std::size_t start = i;
        // A single leading space attaches to the following word or punctuation run.
        if (text[i] == ' ' && i + 1 < n && (cls(i + 1) == CharClass::letter || cls(i + 1) == CharClass::other))
            ++i;
        const CharClass c = cls(i);
        switch (c) {
        case CharClass::letter: {
            while (i < n && cls(i) == CharClass::letter)
                ++i;
            const std::size_t len = i - start;
            pieces += 1 + (len > 8 ? static_cast<std::int64_t>((len - 8 + 5) / 6) : 0);
            break;
        }
        case CharClass::digit: {
            std::size_t len = 0;
            while (i < n && cls(i) == CharClass::digit && len < 3) {
                ++i;
                ++len;
            }
            ++pieces;
            break;
        }
        case CharClass::other:
            while (i < n && cls(i) == CharClass::other && text[i] != '\'')
                ++i;
            if (i == start)
                ++i;
            ++pieces;
            break;
        case CharClass::space:
        case CharClass::newline:
            while (i < n && (cls(i) == CharClass::space || cls(i) == CharClass::newline))
                ++i;
            ++pieces;
            break;
        }
    }
    return pieces;
}

const Tokenizer& default_tokenizer()
{
    static const CharProxyTokenizer proxy;
    return proxy;
}

} // namespace agentbench
