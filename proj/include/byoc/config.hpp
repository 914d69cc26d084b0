#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "byoc/llm.hpp"
#include "byoc/textbudget.hpp"

namespace byoc {

/// Knobs shared by training, inference and evaluation. Snapshotted into
/// every artifact so inference reproduces the training-time budgets.
struct Config {
    int questions_per_sample = 3;
    int context_window = 8192;
    /// Summarize inputs above this many tokens; 0 means a quarter of the context window.
    int summarize_threshold = 0;
    int chunk_tokens = 1500;
    double summary_ratio = 0.2;
    int summary_min_words = 40;
    double chars_per_token = 4.0;
    int max_output_tokens = llm::kDefaultMaxOutputTokens;
    double question_temperature = 0.3;
    double classify_temperature = 0.0;
    double update_temperature = 0.0;
    double summarize_temperature = 0.0;
    /// Training sample order: dataset order unless a shuffle seed is given.
    std::optional<std::uint64_t> shuffle_seed;

    /// Throws validation on out-of-range values.
    void validate() const;

    int threshold() const { return summarize_threshold > 0 ? summarize_threshold : context_window / 4; }
    textbudget::TokenCounter counter() const { return textbudget::TokenCounter(chars_per_token); }
    double temperature(llm::PurposeTag tag) const;

    bool operator==(const Config&) const = default;
};

}  // namespace byoc
