#include "byoc/summarizer.hpp"

#include <algorithm>
#include <cmath>

#include "byoc/error.hpp"

namespace byoc::summarizer {

SummarizeOptions SummarizeOptions::from(const Config& config) {
    SummarizeOptions o;
    o.threshold = static_cast<std::size_t>(config.threshold());
    o.chunk_budget = static_cast<std::size_t>(config.chunk_tokens);
    o.ratio = config.summary_ratio;
    o.min_words = config.summary_min_words;
    o.temperature = config.summarize_temperature;
    o.counter = config.counter();
    return o;
}

std::optional<int> target_words(const SummaryState& state, double ratio, int min_words) {
    if (state.parts_done <= 0) return std::nullopt;
    const auto words = static_cast<double>(textbudget::count_words(state.summary_so_far));
    return std::max(min_words, static_cast<int>(std::lround(words * ratio)));
}

promptkit::PromptBundle render_chunk_prompt(const SummaryState& state, std::string_view chunk,
                                            std::optional<int> words) {
    promptkit::RenderContext ctx;
    ctx.extra["classification_task_description"] = state.purpose;
    ctx.extra["i-1"] = std::to_string(state.parts_done);
    ctx.extra["i"] = std::to_string(state.parts_done + 1);
    ctx.extra["summary_of_previous_sections"] = state.summary_so_far;
    ctx.extra["current part"] = std::string(chunk);
    ctx.extra["length_instruction"] =
        words ? "\n\nThe summary of this part should be around " + std::to_string(*words) + " words." : "";
    return promptkit::render(llm::PurposeTag::summarize_chunk, ctx);
}

namespace {

std::string run_summary_call(promptkit::PromptBundle bundle, std::optional<int> words,
                             const SummarizeOptions& options, llm::Backend& backend, llm::Transcript& transcript) {
    bundle.temperature = options.temperature;
    // Roughly 4/3 tokens per word, doubled for slack.
    bundle.max_output_tokens =
        words ? std::max(64, static_cast<int>(std::ceil(*words * 8.0 / 3.0)))
              : std::max(64, static_cast<int>(options.threshold));
    const auto reply = llm::complete(backend, bundle.request(), transcript);
    const auto first = reply.text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw Error(ErrorCode::parse, "summarize_chunk reply is empty");
    const auto last = reply.text.find_last_not_of(" \t\r\n");
    return reply.text.substr(first, last - first + 1);
}

}  // namespace

std::string request_chunk_summary(const SummaryState& state, const textbudget::Chunk& chunk,
                                  const SummarizeOptions& options, llm::Backend& backend,
                                  llm::Transcript& transcript) {
    if (chunk.text.empty()) throw Error(ErrorCode::validation, "cannot summarize an empty chunk");
    const auto words = target_words(state, options.ratio, options.min_words);
    return run_summary_call(render_chunk_prompt(state, chunk.text, words), words, options, backend, transcript);
}

std::string truncate_at_sentence(std::string_view s, std::size_t budget, const textbudget::TokenCounter& counter) {
    if (counter.count(s) <= budget) return std::string(s);
    const std::string prefix = textbudget::truncate_to_budget(s, budget, counter);
    for (std::size_t p = prefix.size(); p > 0; --p) {
        const char ch = prefix[p - 1];
        if ((ch == '.' || ch == '!' || ch == '?') && (p == s.size() || s[p] == ' ' || s[p] == '\n' || s[p] == '\t')) {
            return prefix.substr(0, p);
        }
    }
    return prefix;
}

std::string summarize(std::string_view x, const promptkit::ClassifierSpec& spec, const SummarizeOptions& options,
                      llm::Backend& backend, llm::Transcript& transcript) {
    if (options.threshold < 64) throw Error(ErrorCode::validation, "summarize threshold must be >= 64 tokens");
    if (options.chunk_budget < 64) throw Error(ErrorCode::validation, "chunk budget must be >= 64 tokens");
    if (x.empty()) return {};
    if (options.counter.count(x) <= options.threshold) return std::string(x);

    SummaryState state;
    state.purpose = spec.purpose;
    state.class_names = spec.names();
    for (const auto& chunk : textbudget::split_chunks(x, options.chunk_budget, options.counter)) {
        state.summary_so_far = request_chunk_summary(state, chunk, options, backend, transcript);
        ++state.parts_done;
    }

    std::string result = std::move(state.summary_so_far);
    if (options.counter.count(result) <= options.threshold) return result;

    // Over budget: one tighter pass over the summary itself (~0.75 words per
    // token, 80% of the threshold), then a sentence-boundary cut.
    const int words = std::max(options.min_words, static_cast<int>(options.threshold * 0.75 * 0.8));
    SummaryState again;
    again.purpose = spec.purpose;
    again.class_names = state.class_names;
    result = run_summary_call(render_chunk_prompt(again, result, words), words, options, backend, transcript);
    if (options.counter.count(result) <= options.threshold) return result;
    return truncate_at_sentence(result, options.threshold, options.counter);
}

}  // namespace byoc::summarizer
