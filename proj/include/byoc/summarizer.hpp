#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "byoc/config.hpp"
#include "byoc/llm.hpp"
#include "byoc/promptkit.hpp"
#include "byoc/textbudget.hpp"

namespace byoc::summarizer {

struct SummaryState {
    int parts_done = 0;
    std::string summary_so_far;
    std::string purpose;
    std::vector<std::string> class_names;
};

struct SummarizeOptions {
    std::size_t threshold = 2048;  // K
    std::size_t chunk_budget = 1500;
    double ratio = 0.2;
    int min_words = 40;
    double temperature = 0.0;
    textbudget::TokenCounter counter;

    static SummarizeOptions from(const Config& config);
};

/// Requested length of part j+1 given the running summary; nullopt for the
/// first part, which carries no proportionality constraint.
std::optional<int> target_words(const SummaryState& state, double ratio, int min_words);

promptkit::PromptBundle render_chunk_prompt(const SummaryState& state, std::string_view chunk,
                                            std::optional<int> words);

std::string request_chunk_summary(const SummaryState& state, const textbudget::Chunk& chunk,
                                  const SummarizeOptions& options, llm::Backend& backend,
                                  llm::Transcript& transcript);

/// Identity when x fits within the threshold. Otherwise folds chunk
/// summaries left to right; an over-threshold result is re-summarized once
/// and then cut at a sentence boundary.
std::string summarize(std::string_view x, const promptkit::ClassifierSpec& spec,
                      const SummarizeOptions& options, llm::Backend& backend,
                      llm::Transcript& transcript);

/// Longest prefix within budget ending at a sentence end, else a word end.
std::string truncate_at_sentence(std::string_view s, std::size_t budget,
                                 const textbudget::TokenCounter& counter);

}  // namespace byoc::summarizer
