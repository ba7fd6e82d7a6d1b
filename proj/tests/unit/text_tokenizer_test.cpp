#include "agentbench/prompts.hpp"
#include "agentbench/task.hpp"
#include "agentbench/text.hpp"
#include "agentbench/tokenizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace agentbench;

TEST(Text, Utf8PrefixNeverSplitsASequence)
{
    const std::string s = "ab\xC3\xA9" "cd"; // "abécd"
    EXPECT_EQ(utf8_prefix(s, 3), "ab");
    EXPECT_EQ(utf8_prefix(s, 4), "ab\xC3\xA9");
    EXPECT_EQ(utf8_prefix(s, 100), s);
    EXPECT_EQ(utf8_prefix("", 5), "");
}

TEST(Text, TrimAndLower)
{
    EXPECT_EQ(trim("  a b \n"), "a b");
    EXPECT_EQ(trim(" \t "), "");
    EXPECT_EQ(to_lower("CoRRect"), "correct");
}

TEST(Text, Fnv1aKnownVectors)
{
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Text, MixSeedSeparatesStreams)
{
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 64; ++s)
        seen.insert(mix_seed(7, s));
    EXPECT_EQ(seen.size(), 64u);
    EXPECT_EQ(mix_seed(1, 2), mix_seed(1, 2));
}

TEST(Text, NumberFormatting)
{
    EXPECT_EQ(format_number(5.0), "5");
    EXPECT_EQ(format_number(-3.0), "-3");
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_fixed(2.25, 2), "2.25");
    EXPECT_EQ(format_fixed(-0.04, 1), "0.0");
    EXPECT_EQ(format_fixed(-28.69, 1), "-28.7");
}

TEST(Tokenizer, ProxyIsCeilBytesOverFour)
{
    CharProxyTokenizer proxy;
    EXPECT_EQ(proxy.count(""), 0);
    EXPECT_EQ(proxy.count("a"), 1);
    EXPECT_EQ(proxy.count("abcd"), 1);
    EXPECT_EQ(proxy.count("abcde"), 2);
    EXPECT_EQ(&default_tokenizer(), &default_tokenizer());
    EXPECT_EQ(default_tokenizer().name(), "chars/4");
}

TEST(Tokenizer, PretokenPieces)
{
    PretokenTokenizer t;
    EXPECT_EQ(t.count(""), 0);
    EXPECT_EQ(t.count("hello"), 1);
    EXPECT_EQ(t.count("hello world"), 2);
    EXPECT_EQ(t.count("don't"), 2);
    EXPECT_EQ(t.count("12345"), 2);
    EXPECT_EQ(t.count("a, b."), 4);
}

TEST(Tokenizer, CountsAreAdditiveEnoughToBeMonotone)
{
    PretokenTokenizer t;
    CharProxyTokenizer p;
    std::string text;
    std::int64_t last_t = 0;
    std::int64_t last_p = 0;
    for (int i = 0; i < 50; ++i) {
        text += " word" + std::to_string(i);
        EXPECT_GE(t.count(text), last_t);
        EXPECT_GE(p.count(text), last_p);
        last_t = t.count(text);
        last_p = p.count(text);
    }
}

// The proxy is only meaningful if it tracks a real pre-tokenizer on the text
// episodes actually carry.
TEST(Tokenizer, ProxyWithinTwentyPercentOnFixtureCorpus)
{
    const auto root = std::filesystem::path(AGENTBENCH_SOURCE_DIR);
    std::vector<std::string> corpus{std::string(prompts::universal_agent()), std::string(prompts::pointwise_judge()),
                                    std::string(prompts::pairwise_judge()), std::string(prompts::continuation()),
                                    std::string(prompts::forced_final())};
    for (const auto& task : load_task_suite(root / "data/fixtures/tasks.jsonl")) {
        corpus.push_back(task.prompt);
        corpus.push_back(task.script.dump());
    }
    CharProxyTokenizer proxy;
    PretokenTokenizer real;
    std::int64_t p = 0;
    std::int64_t r = 0;
    for (const auto& doc : corpus) {
        p += proxy.count(doc);
        r += real.count(doc);
    }
    const double ratio = static_cast<double>(p) / static_cast<double>(r);
    EXPECT_GE(ratio, 0.8) << "proxy " << p << " vs pretoken " << r;
    EXPECT_LE(ratio, 1.2) << "proxy " << p << " vs pretoken " << r;
}
