#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "byoc/config.hpp"
#include "byoc/llm.hpp"
#include "byoc/promptkit.hpp"

namespace byoc::classifier {

struct Provenance {
    std::string transcript_digest;
    std::string transcript_ref;
    std::int64_t build_tokens = 0;
    std::size_t build_calls = 0;
    std::vector<std::string> user_edited;  // classes whose description the user overrode
    /// Descriptions after each training step, in spec class order; entry 0 is the user's.
    std::vector<std::vector<std::string>> description_history;

    bool operator==(const Provenance&) const = default;
};

/// Frozen classifier: final descriptions plus how they were built.
struct ClassifierArtifact {
    std::string name;
    promptkit::ClassifierSpec spec;
    Provenance provenance;
    Config config;

    bool operator==(const ClassifierArtifact&) const = default;
};

struct PredictionOutcome {
    std::string class_name;
    std::string thoughts;
    std::string reflection;
    std::int64_t prompt_tokens = 0;
    std::int64_t output_tokens = 0;
    std::size_t calls = 0;

    bool operator==(const PredictionOutcome&) const = default;
};

enum class BaselineKind { zero_shot, zero_shot_summary, few_shot, few_shot_explanation, few_shot_qa, byoc };
inline constexpr BaselineKind kAllKinds[] = {
    BaselineKind::zero_shot,   BaselineKind::zero_shot_summary,    BaselineKind::few_shot,
    BaselineKind::few_shot_explanation, BaselineKind::few_shot_qa, BaselineKind::byoc};

const char* to_string(BaselineKind kind);
std::optional<BaselineKind> parse_baseline_kind(std::string_view s);

/// A labeled, annotated training example used as a task demonstration.
struct Demo {
    std::string text;
    std::string label;
    std::string explanation;
    std::vector<promptkit::QAItem> qa;

    bool operator==(const Demo&) const = default;
};

std::string render_demo(BaselineKind kind, const Demo& demo);

/// Deployment-time prompt: descriptions and purpose only, no Q&A.
promptkit::PromptBundle build_predict_prompt(const promptkit::ClassifierSpec& spec, std::string_view x,
                                             const Config& config);

/// Runs a prepared classification prompt with the single re-ask on
/// malformed output. Throws classification when the reply names no class.
PredictionOutcome run_prompt(const promptkit::PromptBundle& bundle, const promptkit::ClassifierSpec& spec,
                             llm::Backend& backend, llm::Transcript& transcript);

/// Summarizes x first when it exceeds the artifact's threshold.
PredictionOutcome predict(const ClassifierArtifact& artifact, std::string_view x, llm::Backend& backend,
                          llm::Transcript& transcript);

struct BaselineInputs {
    std::size_t budget = 8192;  // prompt token budget
    Config config;
    llm::Backend* backend = nullptr;        // summarization calls (zero_shot_summary, oversize inputs)
    llm::Transcript* transcript = nullptr;
};

struct BaselinePrompt {
    promptkit::PromptBundle bundle;
    std::size_t demos_included = 0;
    bool truncated = false;
    bool summarized = false;
};

/// Prompt for one baseline regime. zero_shot truncates x to the last whole
/// word that fits; zero_shot_summary summarizes it; few-shot variants pack
/// demos in order until the next one would overflow. Throws validation when
/// even x alone cannot fit.
BaselinePrompt build_baseline_prompt(BaselineKind kind, const promptkit::ClassifierSpec& spec,
                                     const std::vector<Demo>& demos, std::string_view x,
                                     const BaselineInputs& inputs);

/// Parent prediction, then the routed child's prediction. Token usage summed.
PredictionOutcome predict_hierarchical(const ClassifierArtifact& parent,
                                       const std::map<std::string, ClassifierArtifact>& children,
                                       std::string_view x, llm::Backend& backend,
                                       llm::Transcript& transcript);

}  // namespace byoc::classifier
