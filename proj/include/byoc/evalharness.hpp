#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "byoc/classifier.hpp"
#include "byoc/corpus.hpp"
#include "byoc/llm.hpp"

namespace byoc::evalharness {

enum class Outcome { correct, incorrect, abstained, error };
const char* to_string(Outcome o);

struct SampleRecord {
    std::string id;
    std::string gold;
    std::string predicted;
    Outcome outcome = Outcome::incorrect;
    std::string message;
    std::int64_t prompt_tokens = 0;
    std::int64_t output_tokens = 0;
    std::size_t calls = 0;

    bool operator==(const SampleRecord&) const = default;
};

struct EvalReport {
    classifier::BaselineKind method = classifier::BaselineKind::byoc;
    double accuracy = 0.0;
    std::size_t n = 0;
    std::size_t correct = 0;
    std::size_t abstentions = 0;
    std::size_t errors = 0;
    std::int64_t build_tokens = 0;
    double mean_run_tokens = 0.0;  // mean prompt tokens per sample
    std::int64_t prompt_tokens = 0;
    std::int64_t output_tokens = 0;
    bool incomplete = false;
    std::vector<SampleRecord> records;

    bool operator==(const EvalReport&) const = default;
};

struct EvalRequest {
    classifier::BaselineKind method = classifier::BaselineKind::byoc;
    /// Required for byoc; supplies spec and config for every other method when set.
    std::optional<classifier::ClassifierArtifact> artifact;
    /// The user's initial spec, used by the non-byoc methods.
    std::optional<promptkit::ClassifierSpec> spec;
    std::vector<classifier::Demo> demos;
    Config config;
    std::size_t budget = 0;  // prompt budget; 0 = config.context_window

    /// Throws validation when a required input is missing.
    void validate() const;
};

struct EvalRun {
    EvalReport report;
    llm::Transcript transcript;  // merged in dataset order
};

/// Reference implementation: one sample after another.
EvalRun evaluate_serial(const EvalRequest& request, const corpus::Dataset& split, llm::Backend& backend);

/// Samples run concurrently (OpenMP); records and transcript merged in dataset
/// order, so the result matches evaluate_serial for order-independent backends.
EvalRun evaluate(const EvalRequest& request, const corpus::Dataset& split, llm::Backend& backend);

/// Aligned text table, rows in ladder order.
std::string compare(std::vector<EvalReport> reports);

/// One summary line per report followed by its per-sample lines.
std::string export_reports(const std::vector<EvalReport>& reports);
std::vector<EvalReport> import_reports(std::string_view jsonl);

}  // namespace byoc::evalharness
