#pragma once

// nlohmann/json adapters for the domain types.

#include <json.hpp>

#include "byoc/classifier.hpp"
#include "byoc/config.hpp"
#include "byoc/evalharness.hpp"
#include "byoc/llm.hpp"
#include "byoc/promptkit.hpp"

namespace byoc {
void to_json(nlohmann::json& j, const Config& c);
/// Unknown keys are rejected.
void from_json(const nlohmann::json& j, Config& c);
}  // namespace byoc

namespace byoc::llm {
void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);
void to_json(nlohmann::json& j, const CompletionRequest& r);
void from_json(const nlohmann::json& j, CompletionRequest& r);
}  // namespace byoc::llm

namespace byoc::promptkit {
void to_json(nlohmann::json& j, const ClassSpec& c);
void from_json(const nlohmann::json& j, ClassSpec& c);
void to_json(nlohmann::json& j, const ClassifierSpec& s);
void from_json(const nlohmann::json& j, ClassifierSpec& s);
void to_json(nlohmann::json& j, const QAItem& q);
void from_json(const nlohmann::json& j, QAItem& q);
}  // namespace byoc::promptkit

namespace byoc::classifier {
void to_json(nlohmann::json& j, const Provenance& p);
void from_json(const nlohmann::json& j, Provenance& p);
void to_json(nlohmann::json& j, const ClassifierArtifact& a);
void from_json(const nlohmann::json& j, ClassifierArtifact& a);
void to_json(nlohmann::json& j, const Demo& d);
void from_json(const nlohmann::json& j, Demo& d);
void to_json(nlohmann::json& j, const PredictionOutcome& o);
}  // namespace byoc::classifier

namespace byoc::evalharness {
void to_json(nlohmann::json& j, const SampleRecord& r);
void from_json(const nlohmann::json& j, SampleRecord& r);
void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);
}  // namespace byoc::evalharness
