#include "byoc/textbudget.hpp"

#include <algorithm>
#include <cmath>

#include "byoc/error.hpp"

namespace byoc::textbudget {

namespace {

bool is_continuation(unsigned char b) { return (b & 0xC0) == 0x80; }

bool is_space(char ch) { return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v'; }

}  // namespace

std::size_t code_points(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char b : s) n += !is_continuation(b);
    return n;
}

std::vector<std::size_t> code_point_offsets(std::string_view s) {
    std::vector<std::size_t> offsets;
    offsets.reserve(s.size() + 1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_continuation(static_cast<unsigned char>(s[i]))) offsets.push_back(i);
    }
    offsets.push_back(s.size());
    return offsets;
}

std::size_t count_words(std::string_view s) {
    std::size_t words = 0;
    bool in_word = false;
    for (char ch : s) {
        if (is_space(ch)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

TokenCounter::TokenCounter(double chars_per_token) : chars_per_token_(chars_per_token) {
    if (!(chars_per_token > 0.0)) {
        throw Error(ErrorCode::validation, "chars_per_token must be positive");
    }
}

TokenCounter TokenCounter::exact(Plugin plugin) {
    if (!plugin) throw Error(ErrorCode::validation, "exact token counter needs a plugin");
    TokenCounter c;
    c.plugin_ = std::move(plugin);
    return c;
}

std::size_t TokenCounter::count(std::string_view s) const {
    if (s.empty()) return 0;
    if (plugin_) return std::max<std::size_t>(1, plugin_(s));
    return static_cast<std::size_t>(std::ceil(static_cast<double>(code_points(s)) / chars_per_token_));
}

std::size_t count_tokens(std::string_view s, const TokenCounter& c) { return c.count(s); }

std::vector<std::size_t> count_tokens_serial(std::span<const std::string> texts, const TokenCounter& c) {
    std::vector<std::size_t> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = c.count(texts[i]);
    return out;
}

std::vector<std::size_t> count_tokens_batch(std::span<const std::string> texts, const TokenCounter& c) {
    std::vector<std::size_t> out(texts.size());
    const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = c.count(texts[i]);
    return out;
}

namespace {

// Token counts over code-point ranges of one string.
class RangeCounter {
public:
    RangeCounter(std::string_view s, const TokenCounter& c)
        : s_(s), c_(c), offsets_(code_point_offsets(s)) {}

    std::size_t size() const { return offsets_.size() - 1; }

    std::size_t tokens(std::size_t a, std::size_t b) const {
        if (b <= a) return 0;
        if (c_.is_heuristic()) {
            return static_cast<std::size_t>(std::ceil(static_cast<double>(b - a) / c_.chars_per_token()));
        }
        return c_.count(text(a, b));
    }

    std::string_view text(std::size_t a, std::size_t b) const {
        return s_.substr(offsets_[a], offsets_[b] - offsets_[a]);
    }

    /// Code point at index i if it is ASCII, else 0.
    char ascii(std::size_t i) const {
        const auto b = static_cast<unsigned char>(s_[offsets_[i]]);
        return b < 0x80 ? static_cast<char>(b) : '\0';
    }

    /// Largest e in (start, n] with tokens(start, e) <= budget; start + 1 if none.
    std::size_t max_end(std::size_t start, std::size_t budget) const {
        std::size_t lo = start + 1, hi = size();
        if (tokens(start, lo) > budget) return lo;
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo + 1) / 2;
            if (tokens(start, mid) <= budget) lo = mid; else hi = mid - 1;
        }
        return lo;
    }

private:
    std::string_view s_;
    const TokenCounter& c_;
    std::vector<std::size_t> offsets_;
};

// Preference for ending a chunk just before code point p.
int break_rank(const RangeCounter& rc, std::size_t p) {
    const std::size_t n = rc.size();
    if (p == 0 || p >= n) return 0;
    const char prev = rc.ascii(p - 1);
    const char next = rc.ascii(p);
    if (prev == '\n' && next != '\n') {
        if (p >= 2 && rc.ascii(p - 2) == '\n') return 4;
        return 3;
    }
    if ((prev == ' ' || prev == '\t') && !is_space(next)) {
        if (p >= 2) {
            const char before = rc.ascii(p - 2);
            if (before == '.' || before == '!' || before == '?') return 2;
        }
        return 1;
    }
    return 0;
}

}  // namespace

namespace {

// Token position of code point p: p / chars_per_token for the heuristic,
// the count of the prefix otherwise.
double position(const RangeCounter& rc, const TokenCounter& c, std::size_t p) {
    if (c.is_heuristic()) return static_cast<double>(p) / c.chars_per_token();
    return static_cast<double>(rc.tokens(0, p));
}

// Smallest p in [0, n] whose position is >= x.
std::size_t first_at(const RangeCounter& rc, const TokenCounter& c, double x) {
    std::size_t lo = 0, hi = rc.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (position(rc, c, mid) >= x) hi = mid; else lo = mid + 1;
    }
    return lo;
}

// Largest p in [0, n] whose position is <= x (0 if none).
std::size_t last_at(const RangeCounter& rc, const TokenCounter& c, double x) {
    std::size_t lo = 0, hi = rc.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        if (position(rc, c, mid) <= x) lo = mid; else hi = mid - 1;
    }
    return lo;
}

// Cut points for exactly k chunks, each cut within +-w tokens of its share
// i * total / k, or empty when that is impossible. Within the window the
// strongest boundary wins, then the one nearest the share.
std::vector<std::size_t> cuts_for(const RangeCounter& rc, const TokenCounter& c, std::size_t budget, std::size_t k,
                                  double w) {
    const std::size_t n = rc.size();
    const double total = position(rc, c, n);
    std::vector<std::size_t> cuts{0};
    for (std::size_t i = 1; i < k; ++i) {
        const std::size_t prev = cuts.back();
        const double target = total * static_cast<double>(i) / static_cast<double>(k);
        // Leave no more than budget per remaining chunk.
        const double floor_x = total - static_cast<double>((k - i) * budget);
        const std::size_t lo = std::max({first_at(rc, c, target - w), first_at(rc, c, floor_x), prev + 1});
        const std::size_t hi = std::min({last_at(rc, c, target + w), rc.max_end(prev, budget), n - 1});
        if (lo > hi || rc.tokens(prev, lo) > budget) return {};
        std::size_t best = lo;
        int best_rank = -1;
        double best_dist = 0;
        for (std::size_t p = lo; p <= hi; ++p) {
            const int r = break_rank(rc, p);
            const double dist = std::abs(position(rc, c, p) - target);
            if (r > best_rank || (r == best_rank && dist < best_dist)) {
                best = p;
                best_rank = r;
                best_dist = dist;
            }
        }
        cuts.push_back(best);
    }
    if (rc.tokens(cuts.back(), n) > budget) return {};
    cuts.push_back(n);
    return cuts;
}

}  // namespace

std::vector<Chunk> split_chunks(std::string_view s, std::size_t budget, const TokenCounter& c) {
    if (budget < kMinChunkBudget) {
        throw Error(ErrorCode::validation, "chunk budget must be at least " + std::to_string(kMinChunkBudget));
    }
    std::vector<Chunk> chunks;
    if (s.empty()) return chunks;

    const RangeCounter rc(s, c);
    const std::size_t n = rc.size();
    const std::size_t total = rc.tokens(0, n);
    const std::size_t k = std::max<std::size_t>(1, (total + budget - 1) / budget);
    // Every cut within w of its share keeps chunk sizes within budget / 2 of
    // each other, with one token to spare for rounding.
    const double w = std::max(0.0, static_cast<double>(budget / 2) - 1.0) / 4.0;

    std::vector<std::size_t> cuts = cuts_for(rc, c, budget, k, w);
    if (cuts.empty()) cuts = cuts_for(rc, c, budget, k + 1, w);
    if (cuts.empty()) {
        // Sizes too uneven to balance: fill each chunk to the last boundary that fits.
        cuts = {0};
        while (cuts.back() < n) {
            const std::size_t start = cuts.back();
            std::size_t end = rc.max_end(start, budget);
            if (end < n) {
                for (std::size_t p = end; p > start + 1; --p) {
                    if (break_rank(rc, p) > 0) {
                        end = p;
                        break;
                    }
                }
            }
            cuts.push_back(end);
        }
    }
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Chunk chunk;
        chunk.index = i;
        chunk.text = std::string(rc.text(cuts[i], cuts[i + 1]));
        chunk.token_count = c.count(chunk.text);
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

std::string truncate_to_budget(std::string_view s, std::size_t budget, const TokenCounter& c) {
    if (c.count(s) <= budget) return std::string(s);
    if (budget == 0) return {};
    const RangeCounter rc(s, c);
    const std::size_t hi = rc.max_end(0, budget);
    if (rc.tokens(0, hi) > budget) return {};
    // Cut before the whitespace that ends the last complete word.
    for (std::size_t p = hi; p > 0; --p) {
        if (is_space(rc.ascii(p)) && !is_space(rc.ascii(p - 1))) {
            return std::string(rc.text(0, p));
        }
    }
    return std::string(rc.text(0, hi));
}

}  // namespace byoc::textbudget
