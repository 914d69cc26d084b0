#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "byoc/classifier.hpp"
#include "byoc/config.hpp"
#include "byoc/corpus.hpp"
#include "byoc/llm.hpp"
#include "byoc/promptkit.hpp"

namespace byoc::trainer {

enum class Phase { asking, predicted, labeled, updated };
const char* to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view s);

struct SampleState {
    corpus::Sample sample;
    std::vector<promptkit::QAItem> qa;
    std::optional<std::string> predicted_class;  // unset on abstention
    std::string predicted_raw;                   // Class field as the model wrote it
    std::string model_thoughts;
    std::string model_explanation;               // self-reflection, offered as the user's draft
    std::string user_label;
    std::string user_explanation;
    Phase phase = Phase::asking;

    bool has_pending_question() const { return !qa.empty() && !qa.back().answered(); }
    std::size_t answered() const;
    bool abstained() const { return phase != Phase::asking && !predicted_class; }

    bool operator==(const SampleState&) const = default;
};

struct Question {
    std::string question;
    std::string explanation;
};

struct Prediction {
    std::optional<std::string> predicted_class;
    std::string raw_class;
    std::string thoughts;
    std::string reflection;
};

struct DescriptionStep {
    std::size_t sample_index = 0;
    std::string class_name;
    std::string reason;
    std::vector<std::string> descriptions;  // full d_C after the step, spec class order

    bool operator==(const DescriptionStep&) const = default;
};

/// The interactive loop: for each sample ask M questions, predict, take the
/// user's label, rewrite that class's description. One writer at a time.
class TrainingSession {
public:
    /// Validates the spec, summarizes over-threshold samples (original kept in
    /// meta["original_text"]) and positions at sample 0.
    static TrainingSession start(promptkit::ClassifierSpec spec0, std::vector<corpus::Sample> samples,
                                 Config config, std::shared_ptr<llm::Backend> backend,
                                 llm::Transcript transcript = {});

    Question next_question();
    Phase submit_answer(const std::string& answer);
    Prediction predict_current();
    /// Returns the descriptions after the update, spec class order.
    std::map<std::string, std::string> submit_label(const std::string& label, const std::string& explanation);
    classifier::ClassifierArtifact finalize(const std::map<std::string, std::string>& edits,
                                            const std::string& name) const;

    const promptkit::ClassifierSpec& spec() const noexcept { return spec_; }
    const promptkit::ClassifierSpec& initial_spec() const noexcept { return spec0_; }
    const Config& config() const noexcept { return config_; }
    const std::vector<SampleState>& states() const noexcept { return states_; }
    const SampleState& current() const;
    std::size_t cursor() const noexcept { return cursor_; }
    bool complete() const noexcept { return cursor_ >= states_.size(); }
    const llm::Transcript& transcript() const noexcept { return transcript_; }
    const std::vector<DescriptionStep>& history() const noexcept { return history_; }
    std::size_t expected_questions() const;

    /// Descriptions after `step` updates (0 = the user's initial ones).
    promptkit::ClassifierSpec spec_at(std::size_t step) const;

    /// Task demonstrations for the few-shot baselines, from labeled samples.
    std::vector<classifier::Demo> demos() const;

    void attach_backend(std::shared_ptr<llm::Backend> backend) { backend_ = std::move(backend); }

    /// Checkpoint document (schema-versioned JSON text).
    std::string checkpoint() const;
    static TrainingSession restore(std::string_view checkpoint, std::shared_ptr<llm::Backend> backend);

    static constexpr int kSchemaVersion = 1;

private:
    TrainingSession() = default;

    SampleState& current_mut();
    llm::Backend& backend() const;
    void advance();

    promptkit::ClassifierSpec spec0_;
    promptkit::ClassifierSpec spec_;
    Config config_;
    std::vector<SampleState> states_;
    std::vector<DescriptionStep> history_;
    std::size_t cursor_ = 0;
    llm::Transcript transcript_;
    std::shared_ptr<llm::Backend> backend_;
};

}  // namespace byoc::trainer
