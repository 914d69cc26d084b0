#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "byoc/llm.hpp"

namespace byoc::promptkit {

struct ClassSpec {
    std::string name;
    std::string description;

    bool operator==(const ClassSpec&) const = default;
};

struct ClassifierSpec {
    std::string purpose;
    std::vector<ClassSpec> classes;

    /// Throws validation: fewer than 2 classes, empty purpose, empty,
    /// duplicate or multi-line class names.
    void validate() const;

    const ClassSpec* find(std::string_view name) const;
    ClassSpec* find(std::string_view name);
    std::vector<std::string> names() const;

    bool operator==(const ClassifierSpec&) const = default;
};

struct QAItem {
    std::string question;
    std::string answer;
    std::string model_explanation;

    bool answered() const noexcept { return !answer.empty(); }
    bool operator==(const QAItem&) const = default;
};

/// Labeled sections of a model reply in schema order.
class FieldMap {
public:
    void set(std::string label, std::string value);
    /// Throws parse when absent.
    const std::string& at(std::string_view label) const;
    const std::string* find(std::string_view label) const;
    const std::vector<std::pair<std::string, std::string>>& items() const noexcept { return items_; }

    bool operator==(const FieldMap&) const = default;

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

struct PromptBundle {
    llm::PurposeTag purpose = llm::PurposeTag::predict;
    std::vector<llm::ChatMessage> messages;  // system, then user
    double temperature = 0.0;
    int max_output_tokens = llm::kDefaultMaxOutputTokens;
    std::vector<std::string> schema;  // expected reply labels; empty for free text

    const std::string& system() const { return messages.at(0).content; }
    const std::string& user() const { return messages.at(1).content; }
    llm::CompletionRequest request() const;
};

/// Placeholder values beyond spec/text/qa: model_prediction, correct_class,
/// user_explanation, class_to_be_updated (update); i, i-1,
/// summary_of_previous_sections, current part, length_instruction
/// (summarize_chunk); demonstrations (baseline).
struct RenderContext {
    const ClassifierSpec* spec = nullptr;
    std::string text;
    std::vector<QAItem> qa;
    std::map<std::string, std::string> extra;
};

/// Raw template resource for `kind`, `<placeholder>` markers intact.
struct Template {
    std::string_view system;
    std::string_view user;
};
Template template_for(llm::PurposeTag kind);

/// Substitutes `<name>` and `${name}` markers whose names appear in `values`
/// or in the known placeholder set; unknown `<...>` text (e.g. the reply
/// schema) is left as is. Throws validation naming the first known
/// placeholder without a value.
std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values);

PromptBundle render(llm::PurposeTag kind, const RenderContext& ctx);

std::vector<std::string> schema_for(llm::PurposeTag kind);

/// Labels are matched case-insensitively at line starts; each value runs
/// to the next schema label. Throws parse listing missing labels
/// (detail key "missing", comma separated).
FieldMap parse(llm::PurposeTag kind, std::string_view reply);

/// Inverse of parse: "Label: value" blocks in schema order.
std::string synthesize(const FieldMap& fields);

/// Case-insensitive exact name after trimming punctuation and quotes, else
/// the single class with a whole-word occurrence.
std::optional<std::string> match_class(std::string_view raw, const ClassifierSpec& spec);

// Shared rendering pieces, exposed for the baseline prompt builder and tests.
std::string render_class_names(const ClassifierSpec& spec);
std::string render_class_descriptions(const ClassifierSpec& spec);
std::string render_qa(const std::vector<QAItem>& qa);

}  // namespace byoc::promptkit
