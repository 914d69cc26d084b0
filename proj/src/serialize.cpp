#include "byoc/serialize.hpp"

#include <set>

#include "byoc/error.hpp"

namespace byoc {

using nlohmann::json;

void to_json(json& j, const Config& c) {
    j = json{{"questions_per_sample", c.questions_per_sample},
             {"context_window", c.context_window},
             {"summarize_threshold", c.summarize_threshold},
             {"chunk_tokens", c.chunk_tokens},
             {"summary_ratio", c.summary_ratio},
             {"summary_min_words", c.summary_min_words},
             {"chars_per_token", c.chars_per_token},
             {"max_output_tokens", c.max_output_tokens},
             {"question_temperature", c.question_temperature},
             {"classify_temperature", c.classify_temperature},
             {"update_temperature", c.update_temperature},
             {"summarize_temperature", c.summarize_temperature}};
    j["shuffle_seed"] = c.shuffle_seed ? json(*c.shuffle_seed) : json(nullptr);
}

void from_json(const json& j, Config& c) {
    if (!j.is_object()) throw Error(ErrorCode::config, "config must be an object");
    static const std::set<std::string> known = {
        "questions_per_sample", "context_window",       "summarize_threshold", "chunk_tokens",
        "summary_ratio",        "summary_min_words",    "chars_per_token",     "max_output_tokens",
        "question_temperature", "classify_temperature", "update_temperature",  "summarize_temperature",
        "shuffle_seed"};
    for (const auto& [k, v] : j.items()) {
        if (!known.contains(k)) throw Error(ErrorCode::config, "unknown config key '" + k + "'", {{"key", k}});
    }
    try {
        Config d;
        c.questions_per_sample = j.value("questions_per_sample", d.questions_per_sample);
        c.context_window = j.value("context_window", d.context_window);
        c.summarize_threshold = j.value("summarize_threshold", d.summarize_threshold);
        c.chunk_tokens = j.value("chunk_tokens", d.chunk_tokens);
        c.summary_ratio = j.value("summary_ratio", d.summary_ratio);
        c.summary_min_words = j.value("summary_min_words", d.summary_min_words);
        c.chars_per_token = j.value("chars_per_token", d.chars_per_token);
        c.max_output_tokens = j.value("max_output_tokens", d.max_output_tokens);
        c.question_temperature = j.value("question_temperature", d.question_temperature);
        c.classify_temperature = j.value("classify_temperature", d.classify_temperature);
        c.update_temperature = j.value("update_temperature", d.update_temperature);
        c.summarize_temperature = j.value("summarize_temperature", d.summarize_temperature);
        c.shuffle_seed.reset();
        if (const auto it = j.find("shuffle_seed"); it != j.end() && !it->is_null()) {
            c.shuffle_seed = it->get<std::uint64_t>();
        }
    } catch (const json::type_error& e) {
        throw Error(ErrorCode::config, std::string("config: ") + e.what());
    }
}

}  // namespace byoc

namespace byoc::llm {

void to_json(json& j, const ChatMessage& m) { j = json{{"role", to_string(m.role)}, {"content", m.content}}; }

void from_json(const json& j, ChatMessage& m) {
    const auto role = parse_role(j.at("role").get<std::string>());
    if (!role) throw Error(ErrorCode::validation, "unknown role " + j.at("role").dump());
    m.role = *role;
    m.content = j.at("content").get<std::string>();
}

void to_json(json& j, const CompletionRequest& r) {
    j = json{{"purpose", to_string(r.purpose)},
             {"temperature", r.temperature},
             {"max_output_tokens", r.max_output_tokens},
             {"messages", r.messages}};
}

void from_json(const json& j, CompletionRequest& r) {
    const auto tag = parse_purpose(j.at("purpose").get<std::string>());
    if (!tag) throw Error(ErrorCode::validation, "unknown purpose " + j.at("purpose").dump());
    r.purpose = *tag;
    r.temperature = j.at("temperature").get<double>();
    r.max_output_tokens = j.at("max_output_tokens").get<int>();
    r.messages = j.at("messages").get<std::vector<ChatMessage>>();
}

}  // namespace byoc::llm

namespace byoc::promptkit {

void to_json(json& j, const ClassSpec& c) { j = json{{"name", c.name}, {"description", c.description}}; }

void from_json(const json& j, ClassSpec& c) {
    c.name = j.at("name").get<std::string>();
    c.description = j.value("description", std::string());
}

void to_json(json& j, const ClassifierSpec& s) { j = json{{"purpose", s.purpose}, {"classes", s.classes}}; }

void from_json(const json& j, ClassifierSpec& s) {
    s.purpose = j.at("purpose").get<std::string>();
    s.classes = j.at("classes").get<std::vector<ClassSpec>>();
}

void to_json(json& j, const QAItem& q) {
    j = json{{"question", q.question}, {"answer", q.answer}, {"model_explanation", q.model_explanation}};
}

void from_json(const json& j, QAItem& q) {
    q.question = j.at("question").get<std::string>();
    q.answer = j.value("answer", std::string());
    q.model_explanation = j.value("model_explanation", std::string());
}

}  // namespace byoc::promptkit

namespace byoc::classifier {

void to_json(json& j, const Provenance& p) {
    j = json{{"transcript_digest", p.transcript_digest},
             {"transcript_ref", p.transcript_ref},
             {"build_tokens", p.build_tokens},
             {"build_calls", p.build_calls},
             {"user_edited", p.user_edited},
             {"description_history", p.description_history}};
}

void from_json(const json& j, Provenance& p) {
    p.transcript_digest = j.value("transcript_digest", std::string());
    p.transcript_ref = j.value("transcript_ref", std::string());
    p.build_tokens = j.value("build_tokens", std::int64_t{0});
    p.build_calls = j.value("build_calls", std::size_t{0});
    p.user_edited = j.value("user_edited", std::vector<std::string>{});
    p.description_history = j.value("description_history", std::vector<std::vector<std::string>>{});
}

void to_json(json& j, const ClassifierArtifact& a) {
    j = json{{"name", a.name}, {"spec", a.spec}, {"provenance", a.provenance}, {"config", a.config}};
}

void from_json(const json& j, ClassifierArtifact& a) {
    a.name = j.at("name").get<std::string>();
    a.spec = j.at("spec").get<promptkit::ClassifierSpec>();
    a.provenance = j.value("provenance", Provenance{});
    a.config = j.contains("config") ? j.at("config").get<Config>() : Config{};
}

void to_json(json& j, const Demo& d) {
    j = json{{"text", d.text}, {"label", d.label}, {"explanation", d.explanation}, {"qa", d.qa}};
}

void from_json(const json& j, Demo& d) {
    d.text = j.at("text").get<std::string>();
    d.label = j.at("label").get<std::string>();
    d.explanation = j.value("explanation", std::string());
    d.qa = j.value("qa", std::vector<promptkit::QAItem>{});
}

void to_json(json& j, const PredictionOutcome& o) {
    j = json{{"class", o.class_name},
             {"thoughts", o.thoughts},
             {"reflection", o.reflection},
             {"tokens", {{"prompt", o.prompt_tokens}, {"output", o.output_tokens}}},
             {"calls", o.calls}};
}

}  // namespace byoc::classifier

namespace byoc::evalharness {

namespace {
Outcome parse_outcome(const std::string& s) {
    for (auto o : {Outcome::correct, Outcome::incorrect, Outcome::abstained, Outcome::error}) {
        if (s == to_string(o)) return o;
    }
    throw Error(ErrorCode::validation, "unknown outcome " + s);
}
}  // namespace

void to_json(json& j, const SampleRecord& r) {
    j = json{{"id", r.id},
             {"gold", r.gold},
             {"predicted", r.predicted},
             {"outcome", to_string(r.outcome)},
             {"message", r.message},
             {"prompt_tokens", r.prompt_tokens},
             {"output_tokens", r.output_tokens},
             {"calls", r.calls}};
}

void from_json(const json& j, SampleRecord& r) {
    r.id = j.at("id").get<std::string>();
    r.gold = j.at("gold").get<std::string>();
    r.predicted = j.value("predicted", std::string());
    r.outcome = parse_outcome(j.at("outcome").get<std::string>());
    r.message = j.value("message", std::string());
    r.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
    r.output_tokens = j.value("output_tokens", std::int64_t{0});
    r.calls = j.value("calls", std::size_t{0});
}

void to_json(json& j, const EvalReport& r) {
    j = json{{"method", classifier::to_string(r.method)},
             {"accuracy", r.accuracy},
             {"n", r.n},
             {"correct", r.correct},
             {"abstentions", r.abstentions},
             {"errors", r.errors},
             {"build_tokens", r.build_tokens},
             {"mean_run_tokens", r.mean_run_tokens},
             {"prompt_tokens", r.prompt_tokens},
             {"output_tokens", r.output_tokens},
             {"incomplete", r.incomplete},
             {"records", r.records}};
}

void from_json(const json& j, EvalReport& r) {
    const auto kind = classifier::parse_baseline_kind(j.at("method").get<std::string>());
    if (!kind) throw Error(ErrorCode::validation, "unknown method " + j.at("method").dump());
    r.method = *kind;
    r.accuracy = j.at("accuracy").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.correct = j.at("correct").get<std::size_t>();
    r.abstentions = j.at("abstentions").get<std::size_t>();
    r.errors = j.at("errors").get<std::size_t>();
    r.build_tokens = j.at("build_tokens").get<std::int64_t>();
    r.mean_run_tokens = j.at("mean_run_tokens").get<double>();
    r.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
    r.output_tokens = j.at("output_tokens").get<std::int64_t>();
    r.incomplete = j.at("incomplete").get<bool>();
    r.records = j.value("records", std::vector<SampleRecord>{});
}

}  // namespace byoc::evalharness
