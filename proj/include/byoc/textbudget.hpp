#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace byoc::textbudget {

/// Heuristic mode counts ceil(code_points / chars_per_token). Exact mode
/// delegates to a plugged-in tokenizer.
class TokenCounter {
public:
    using Plugin = std::function<std::size_t(std::string_view)>;

    TokenCounter() = default;
    explicit TokenCounter(double chars_per_token);

    static TokenCounter exact(Plugin plugin);

    std::size_t count(std::string_view s) const;
    bool is_heuristic() const noexcept { return !plugin_; }
    double chars_per_token() const noexcept { return chars_per_token_; }

private:
    double chars_per_token_ = 4.0;
    Plugin plugin_;
};

std::size_t count_tokens(std::string_view s, const TokenCounter& c);

/// Batch counting over many texts. The serial variant is the reference the
/// OpenMP one is tested against.
std::vector<std::size_t> count_tokens_serial(std::span<const std::string> texts,
                                             const TokenCounter& c);
std::vector<std::size_t> count_tokens_batch(std::span<const std::string> texts,
                                            const TokenCounter& c);

struct Chunk {
    std::size_t index = 0;
    std::string text;
    std::size_t token_count = 0;
};

inline constexpr std::size_t kMinChunkBudget = 16;

/// Splits into roughly equal chunks of at most `budget` tokens, preferring
/// blank line > newline > sentence end > space > hard cut. Chunks concatenate
/// back to `s` exactly.
std::vector<Chunk> split_chunks(std::string_view s, std::size_t budget, const TokenCounter& c);

/// Longest prefix within `budget` tokens that ends on a word boundary; falls
/// back to a hard cut when the first word alone is over budget.
std::string truncate_to_budget(std::string_view s, std::size_t budget, const TokenCounter& c);

// UTF-8 helpers shared with the rest of the library.
std::size_t code_points(std::string_view s);
/// Byte offsets of every code point start, plus s.size() as the final entry.
std::vector<std::size_t> code_point_offsets(std::string_view s);
std::size_t count_words(std::string_view s);

}  // namespace byoc::textbudget
