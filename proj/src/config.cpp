#include "byoc/config.hpp"

#include "byoc/error.hpp"

namespace byoc {

namespace {
void require(bool ok, const char* field, const char* why) {
    if (!ok) throw Error(ErrorCode::validation, std::string("config: ") + field + " " + why, {{"field", field}});
}

bool valid_temperature(double t) { return t >= 0.0 && t <= 2.0; }
}  // namespace

void Config::validate() const {
    require(questions_per_sample >= 0, "questions_per_sample", "must be >= 0");
    require(context_window >= 256, "context_window", "must be >= 256");
    require(threshold() >= 64, "summarize_threshold", "must be >= 64");
    require(chunk_tokens >= 64, "chunk_tokens", "must be >= 64");
    require(summary_ratio > 0.0 && summary_ratio <= 1.0, "summary_ratio", "must be in (0, 1]");
    require(summary_min_words >= 1, "summary_min_words", "must be >= 1");
    require(chars_per_token > 0.0, "chars_per_token", "must be > 0");
    require(max_output_tokens >= 1, "max_output_tokens", "must be >= 1");
    require(valid_temperature(question_temperature), "question_temperature", "must be in [0, 2]");
    require(valid_temperature(classify_temperature), "classify_temperature", "must be in [0, 2]");
    require(valid_temperature(update_temperature), "update_temperature", "must be in [0, 2]");
    require(valid_temperature(summarize_temperature), "summarize_temperature", "must be in [0, 2]");
}

double Config::temperature(llm::PurposeTag tag) const {
    switch (tag) {
        case llm::PurposeTag::gen_question: return question_temperature;
        case llm::PurposeTag::interactive_predict:
        case llm::PurposeTag::predict:
        case llm::PurposeTag::baseline: return classify_temperature;
        case llm::PurposeTag::update: return update_temperature;
        case llm::PurposeTag::summarize_chunk: return summarize_temperature;
    }
    return 0.0;
}

}  // namespace byoc
