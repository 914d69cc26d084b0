#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "byoc/error.hpp"
#include "byoc/textbudget.hpp"
#include "support.hpp"

using namespace byoc;
using namespace byoc::textbudget;

namespace {

std::string join(const std::vector<Chunk>& chunks) {
    std::string out;
    for (const auto& c : chunks) out += c.text;
    return out;
}

// Random text over ASCII words, multi-byte code points and break characters.
std::string random_text(std::mt19937& rng, std::size_t max_len) {
    static const std::vector<std::string> alphabet = {"a", "b", "z", "Q", "\xC3\xA9", "\xE2\x82\xAC", "\xF0\x9F\x98\x80",
                                                      " ", " ", "\n", "\n\n", ".", "!", "?", "\t", "7"};
    std::string s;
    const std::size_t len = rng() % (max_len + 1);
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    return s;
}

}  // namespace

TEST(Counter, HeuristicMatchesCeilOfCharsOverRatio) {
    const TokenCounter c;
    EXPECT_EQ(count_tokens("", c), 0u);
    EXPECT_EQ(count_tokens("abcdefgh", c), 2u);
    EXPECT_EQ(count_tokens("abcdefghi", c), 3u);
    EXPECT_EQ(count_tokens("a", c), 1u);
    // Code points, not bytes.
    EXPECT_EQ(count_tokens("\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9", c), 1u);
    EXPECT_EQ(count_tokens("abcdef", TokenCounter(3.0)), 2u);
    EXPECT_THROW(TokenCounter(0.0), Error);
}

TEST(Counter, MonotoneUnderConcatenation) {
    const TokenCounter c;
    std::mt19937 rng(11);
    for (int i = 0; i < 300; ++i) {
        const auto a = random_text(rng, 40);
        const auto b = random_text(rng, 40);
        EXPECT_GE(c.count(a + b), std::max(c.count(a), c.count(b)));
        if (!a.empty()) {
            EXPECT_GE(c.count(a), 1u);
        }
    }
}

TEST(Counter, ExactPluginIsUsed) {
    const auto c = TokenCounter::exact([](std::string_view s) { return textbudget::count_words(s); });
    EXPECT_EQ(c.count("three short words"), 3u);
    EXPECT_EQ(c.count(""), 0u);
    EXPECT_FALSE(c.is_heuristic());
}

TEST(Counter, BatchMatchesSerialReference) {
    std::mt19937 rng(5);
    std::vector<std::string> texts;
    for (int i = 0; i < 2000; ++i) texts.push_back(random_text(rng, 200));
    const TokenCounter c;
    EXPECT_EQ(count_tokens_batch(texts, c), count_tokens_serial(texts, c));
}

TEST(Chunks, FitsInOneChunk) {
    const TokenCounter c;
    const auto chunks = split_chunks("short text", 16, c);
    ASSERT_EQ(chunks.size(), 1u);
    EXPECT_EQ(chunks[0].text, "short text");
    EXPECT_TRUE(split_chunks("", 16, c).empty());
    EXPECT_THROW(split_chunks("x", 15, c), Error);
}

TEST(Chunks, UnbreakableWordIsHardCut) {
    const TokenCounter c;
    const std::string word(1200, 'x');
    const auto chunks = split_chunks(word, 100, c);
    ASSERT_EQ(chunks.size(), 3u);
    EXPECT_EQ(join(chunks), word);
    for (const auto& ch : chunks) EXPECT_EQ(ch.token_count, 100u);
}

TEST(Chunks, SixParagraphsMatchBruteForceOracle) {
    const TokenCounter c;
    // Six paragraphs of exactly 50 tokens each, separator included.
    std::vector<std::string> paras;
    for (int i = 0; i < 6; ++i) {
        std::string p = "Paragraph " + std::to_string(i) + " ";
        while (p.size() < (i < 5 ? 198u : 200u)) p += "w";
        if (i < 5) p += "\n\n";
        ASSERT_EQ(c.count(p), 50u);
        paras.push_back(p);
    }
    std::string s;
    for (const auto& p : paras) s += p;

    // Oracle: every subset of the five paragraph boundaries; keep splits whose
    // chunks fit, then minimal count, then smallest max-min spread.
    std::vector<std::string> best;
    std::size_t best_spread = SIZE_MAX;
    for (unsigned mask = 0; mask < 32; ++mask) {
        std::vector<std::string> parts{paras[0]};
        for (int b = 0; b < 5; ++b) {
            if (mask & (1u << b)) parts.emplace_back();
            parts.back() += paras[b + 1];
        }
        std::size_t lo = SIZE_MAX, hi = 0;
        bool fits = true;
        for (const auto& p : parts) {
            const auto t = c.count(p);
            fits = fits && t <= 100;
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        if (!fits) continue;
        const std::size_t spread = hi - lo;
        if (best.empty() || parts.size() < best.size() || (parts.size() == best.size() && spread < best_spread)) {
            best = parts;
            best_spread = spread;
        }
    }
    ASSERT_EQ(best.size(), 3u);

    const auto chunks = split_chunks(s, 100, c);
    ASSERT_EQ(chunks.size(), best.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) EXPECT_EQ(chunks[i].text, best[i]);
}

TEST(Chunks, PrefersStrongerBoundaries) {
    const TokenCounter c;
    // A newline sits inside the search window; spaces are everywhere.
    std::string s = byoc::testing::words(30) + "\n" + byoc::testing::words(30);
    const auto chunks = split_chunks(s, 60, c);
    ASSERT_GE(chunks.size(), 2u);
    EXPECT_EQ(chunks[0].text.back(), '\n');
}

TEST(Chunks, RandomizedReconstructionAndBudget) {
    const TokenCounter c;
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::string s = random_text(rng, 600);
        const std::size_t budget = 16 + rng() % 64;
        const auto chunks = split_chunks(s, budget, c);
        ASSERT_EQ(join(chunks), s) << "trial " << trial;
        const std::size_t total = c.count(s);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            EXPECT_EQ(chunks[i].index, i);
            EXPECT_EQ(chunks[i].token_count, c.count(chunks[i].text));
            EXPECT_LE(chunks[i].token_count, budget) << "trial " << trial;
            EXPECT_FALSE(chunks[i].text.empty());
        }
        if (total > 0) {
            const std::size_t ideal = (total + budget - 1) / budget;
            EXPECT_LE(chunks.size(), ideal + 1) << "trial " << trial;
            EXPECT_GE(chunks.size() + 1, ideal) << "trial " << trial;
        }
    }
}

TEST(Chunks, BalancedOnBoundaryRichInput) {
    const TokenCounter c;
    std::mt19937 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        std::string s;
        const std::size_t n_words = 50 + rng() % 800;
        for (std::size_t w = 0; w < n_words; ++w) {
            s += std::string(1 + rng() % 9, static_cast<char>('a' + rng() % 26));
            const auto r = rng() % 40;
            s += r == 0 ? "\n\n" : r == 1 ? "\n" : r < 5 ? ". " : " ";
        }
        const std::size_t budget = 16 + rng() % 200;
        const auto chunks = split_chunks(s, budget, c);
        ASSERT_EQ(join(chunks), s);
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& ch : chunks) {
            lo = std::min(lo, ch.token_count);
            hi = std::max(hi, ch.token_count);
        }
        EXPECT_LE(hi - lo, budget / 2) << "trial " << trial << " budget " << budget;
    }
}

TEST(Truncate, CutsAtWordBoundary) {
    const TokenCounter c;
    EXPECT_EQ(truncate_to_budget("short", 10, c), "short");
    EXPECT_EQ(truncate_to_budget("alpha beta gamma delta", 3, c), "alpha beta");
    EXPECT_EQ(truncate_to_budget("alpha beta gamma delta", 0, c), "");
    const auto hard = truncate_to_budget(std::string(40, 'x'), 2, c);
    EXPECT_EQ(hard, std::string(8, 'x'));
}

TEST(Utf8, Helpers) {
    EXPECT_EQ(code_points("a\xC3\xA9\xE2\x82\xAC"), 3u);
    EXPECT_EQ(code_point_offsets("a\xC3\xA9"), (std::vector<std::size_t>{0, 1, 3}));
    EXPECT_EQ(count_words("  two words\n"), 2u);
}
