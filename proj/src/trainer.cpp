#include "byoc/trainer.hpp"

#include <sstream>

#include <json.hpp>

#include "ask.hpp"
#include "byoc/error.hpp"
#include "byoc/serialize.hpp"
#include "byoc/summarizer.hpp"

namespace byoc::trainer {

using nlohmann::json;

const char* to_string(Phase phase) {
    switch (phase) {
        case Phase::asking: return "asking";
        case Phase::predicted: return "predicted";
        case Phase::labeled: return "labeled";
        case Phase::updated: return "updated";
    }
    return "asking";
}

std::optional<Phase> parse_phase(std::string_view s) {
    for (auto p : {Phase::asking, Phase::predicted, Phase::labeled, Phase::updated}) {
        if (s == to_string(p)) return p;
    }
    return std::nullopt;
}

std::size_t SampleState::answered() const {
    std::size_t n = 0;
    for (const auto& q : qa) n += q.answered();
    return n;
}

namespace {

[[noreturn]] void state_error(const std::string& what) { throw Error(ErrorCode::state, what); }

std::string trimmed(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> descriptions_of(const promptkit::ClassifierSpec& spec) {
    std::vector<std::string> out;
    for (const auto& c : spec.classes) out.push_back(c.description);
    return out;
}

}  // namespace

TrainingSession TrainingSession::start(promptkit::ClassifierSpec spec0, std::vector<corpus::Sample> samples,
                                       Config config, std::shared_ptr<llm::Backend> backend,
                                       llm::Transcript transcript) {
    spec0.validate();
    config.validate();
    if (samples.empty()) throw Error(ErrorCode::validation, "a training session needs at least one sample");
    if (!backend) throw Error(ErrorCode::config, "training session has no backend");

    if (config.shuffle_seed) {
        std::vector<corpus::LabeledSample> labeled;
        for (auto& s : samples) labeled.push_back({std::move(s), {}});
        const corpus::Dataset d(std::move(labeled), corpus::Split::train);
        auto [shuffled, dev, test] = corpus::split_dataset(d, *config.shuffle_seed, {d.size(), 0, 0});
        samples.clear();
        for (const auto& rec : shuffled) samples.push_back(rec.sample);
    } else {
        // Validates id uniqueness and non-empty text.
        std::vector<corpus::LabeledSample> labeled;
        for (const auto& s : samples) labeled.push_back({s, {}});
        corpus::Dataset(std::move(labeled), corpus::Split::train);
    }

    TrainingSession s;
    s.spec0_ = spec0;
    s.spec_ = std::move(spec0);
    s.config_ = config;
    s.backend_ = std::move(backend);
    s.transcript_ = std::move(transcript);

    const auto options = summarizer::SummarizeOptions::from(config);
    for (auto& sample : samples) {
        if (options.counter.count(sample.text) > options.threshold) {
            std::string summary = summarizer::summarize(sample.text, s.spec_, options, *s.backend_, s.transcript_);
            sample.meta["original_text"] = std::move(sample.text);
            sample.text = std::move(summary);
        }
        SampleState st;
        st.sample = std::move(sample);
        s.states_.push_back(std::move(st));
    }
    if (s.config_.questions_per_sample == 0) s.predict_current();
    return s;
}

const SampleState& TrainingSession::current() const {
    if (complete()) state_error("all samples are labeled; finalize the session");
    return states_[cursor_];
}

SampleState& TrainingSession::current_mut() {
    if (complete()) state_error("all samples are labeled; finalize the session");
    return states_[cursor_];
}

llm::Backend& TrainingSession::backend() const {
    if (!backend_) throw Error(ErrorCode::config, "training session has no backend attached");
    return *backend_;
}

std::size_t TrainingSession::expected_questions() const {
    return states_.size() * static_cast<std::size_t>(config_.questions_per_sample);
}

Question TrainingSession::next_question() {
    SampleState& s = current_mut();
    const auto m = static_cast<std::size_t>(config_.questions_per_sample);
    if (s.phase != Phase::asking) state_error(std::string("sample is ") + to_string(s.phase) + ", not asking");
    if (s.has_pending_question()) state_error("the previous question has not been answered");
    if (s.qa.size() >= m) state_error("all " + std::to_string(m) + " questions for this sample were asked");

    promptkit::RenderContext ctx;
    ctx.spec = &spec_;
    ctx.text = s.sample.text;
    ctx.qa = s.qa;
    auto bundle = promptkit::render(llm::PurposeTag::gen_question, ctx);
    bundle.temperature = config_.question_temperature;
    bundle.max_output_tokens = config_.max_output_tokens;
    const auto reply = detail::ask_structured(bundle, backend(), transcript_);

    Question q{reply.fields.at("Question"), reply.fields.at("Explanation")};
    if (q.question.empty()) throw Error(ErrorCode::parse, "gen_question reply has an empty Question field");
    s.qa.push_back({q.question, {}, q.explanation});
    return q;
}

Phase TrainingSession::submit_answer(const std::string& answer) {
    SampleState& s = current_mut();
    if (!s.has_pending_question()) state_error("there is no pending question to answer");
    const std::string a = trimmed(answer);
    if (a.empty()) throw Error(ErrorCode::validation, "answer is empty");
    s.qa.back().answer = a;
    if (s.answered() == static_cast<std::size_t>(config_.questions_per_sample)) predict_current();
    return s.phase;
}

Prediction TrainingSession::predict_current() {
    SampleState& s = current_mut();
    const auto m = static_cast<std::size_t>(config_.questions_per_sample);
    if (s.phase != Phase::asking) state_error(std::string("sample is ") + to_string(s.phase) + ", not asking");
    if (s.qa.size() != m || s.answered() != m) {
        state_error("prediction needs " + std::to_string(m) + " answered questions, have " +
                    std::to_string(s.answered()));
    }
    promptkit::RenderContext ctx;
    ctx.spec = &spec_;
    ctx.text = s.sample.text;
    ctx.qa = s.qa;
    auto bundle = promptkit::render(llm::PurposeTag::interactive_predict, ctx);
    bundle.temperature = config_.classify_temperature;
    bundle.max_output_tokens = config_.max_output_tokens;
    const auto reply = detail::ask_structured(bundle, backend(), transcript_);

    Prediction p;
    p.raw_class = reply.fields.at("Class");
    p.predicted_class = promptkit::match_class(p.raw_class, spec_);
    p.thoughts = reply.fields.at("Thoughts");
    p.reflection = reply.fields.at("Reflection");
    s.predicted_class = p.predicted_class;
    s.predicted_raw = p.raw_class;
    s.model_thoughts = p.thoughts;
    s.model_explanation = p.reflection;
    s.phase = Phase::predicted;
    return p;
}

std::map<std::string, std::string> TrainingSession::submit_label(const std::string& label,
                                                                 const std::string& explanation) {
    SampleState& s = current_mut();
    if (s.phase != Phase::predicted && s.phase != Phase::labeled) {
        state_error(std::string("sample is ") + to_string(s.phase) + "; labels are taken after prediction");
    }
    const auto* cls = spec_.find(trimmed(label));
    if (!cls) {
        throw Error(ErrorCode::validation, "'" + label + "' is not a class of this classifier", {{"class", label}});
    }
    s.user_label = cls->name;
    s.user_explanation = trimmed(explanation).empty() ? s.model_explanation : trimmed(explanation);
    s.phase = Phase::labeled;

    promptkit::RenderContext ctx;
    ctx.spec = &spec_;
    ctx.text = s.sample.text;
    ctx.qa = s.qa;
    ctx.extra["model_prediction"] =
        s.predicted_class ? *s.predicted_class : (s.predicted_raw.empty() ? std::string("none") : s.predicted_raw);
    ctx.extra["correct_class"] = s.user_label;
    ctx.extra["user_explanation"] = s.user_explanation;
    ctx.extra["class_to_be_updated"] = s.user_label;
    auto bundle = promptkit::render(llm::PurposeTag::update, ctx);
    bundle.temperature = config_.update_temperature;
    bundle.max_output_tokens = config_.max_output_tokens;
    const auto reply = detail::ask_structured(bundle, backend(), transcript_);

    const std::string& description = reply.fields.at("Description");
    if (description.empty()) throw Error(ErrorCode::parse, "update reply has an empty Description field");
    spec_.find(s.user_label)->description = description;
    history_.push_back({cursor_, s.user_label, reply.fields.at("Reason"), descriptions_of(spec_)});
    s.phase = Phase::updated;

    std::map<std::string, std::string> out;
    for (const auto& c : spec_.classes) out[c.name] = c.description;
    advance();
    return out;
}

void TrainingSession::advance() {
    ++cursor_;
    if (!complete() && config_.questions_per_sample == 0) predict_current();
}

classifier::ClassifierArtifact TrainingSession::finalize(const std::map<std::string, std::string>& edits,
                                                         const std::string& name) const {
    std::string pending;
    for (const auto& st : states_) {
        if (st.phase != Phase::updated) pending += (pending.empty() ? "" : ",") + st.sample.id;
    }
    if (!pending.empty()) {
        throw Error(ErrorCode::state, "samples not yet labeled: " + pending, {{"ids", pending}});
    }
    if (trimmed(name).empty()) throw Error(ErrorCode::validation, "classifier name is empty");

    classifier::ClassifierArtifact a;
    a.name = trimmed(name);
    a.spec = spec_;
    for (const auto& [cls, text] : edits) {
        auto* c = a.spec.find(cls);
        if (!c) throw Error(ErrorCode::validation, "edit names unknown class " + cls, {{"class", cls}});
        if (c->description != text) {
            c->description = text;
            a.provenance.user_edited.push_back(cls);
        }
    }
    a.spec.validate();
    a.provenance.transcript_digest = transcript_.digest();
    a.provenance.build_tokens = transcript_.total_tokens();
    a.provenance.build_calls = transcript_.size();
    a.provenance.description_history.push_back(descriptions_of(spec0_));
    for (const auto& step : history_) a.provenance.description_history.push_back(step.descriptions);
    a.config = config_;
    return a;
}

promptkit::ClassifierSpec TrainingSession::spec_at(std::size_t step) const {
    if (step > history_.size()) {
        throw Error(ErrorCode::validation, "history has " + std::to_string(history_.size()) + " steps");
    }
    promptkit::ClassifierSpec s = spec0_;
    if (step == 0) return s;
    const auto& d = history_[step - 1].descriptions;
    for (std::size_t k = 0; k < s.classes.size(); ++k) s.classes[k].description = d[k];
    return s;
}

std::vector<classifier::Demo> TrainingSession::demos() const {
    std::vector<classifier::Demo> out;
    for (const auto& st : states_) {
        if (st.phase != Phase::labeled && st.phase != Phase::updated) continue;
        out.push_back({st.sample.text, st.user_label, st.user_explanation, st.qa});
    }
    return out;
}

// --- checkpoint ---

namespace {

json state_to_json(const SampleState& s) {
    json j;
    j["id"] = s.sample.id;
    j["text"] = s.sample.text;
    j["meta"] = s.sample.meta;
    j["qa"] = s.qa;
    j["predicted_class"] = s.predicted_class ? json(*s.predicted_class) : json(nullptr);
    j["predicted_raw"] = s.predicted_raw;
    j["model_thoughts"] = s.model_thoughts;
    j["model_explanation"] = s.model_explanation;
    j["user_label"] = s.user_label;
    j["user_explanation"] = s.user_explanation;
    j["phase"] = to_string(s.phase);
    return j;
}

SampleState state_from_json(const json& j) {
    SampleState s;
    s.sample.id = j.at("id").get<std::string>();
    s.sample.text = j.at("text").get<std::string>();
    s.sample.meta = j.value("meta", std::map<std::string, std::string>{});
    s.qa = j.value("qa", std::vector<promptkit::QAItem>{});
    if (!j.at("predicted_class").is_null()) s.predicted_class = j["predicted_class"].get<std::string>();
    s.predicted_raw = j.value("predicted_raw", std::string());
    s.model_thoughts = j.value("model_thoughts", std::string());
    s.model_explanation = j.value("model_explanation", std::string());
    s.user_label = j.value("user_label", std::string());
    s.user_explanation = j.value("user_explanation", std::string());
    const auto phase = parse_phase(j.at("phase").get<std::string>());
    if (!phase) throw Error(ErrorCode::validation, "checkpoint has unknown phase " + j.at("phase").dump());
    s.phase = *phase;
    return s;
}

}  // namespace

std::string TrainingSession::checkpoint() const {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["spec0"] = spec0_;
    j["spec"] = spec_;
    j["config"] = config_;
    j["cursor"] = cursor_;
    j["states"] = json::array();
    for (const auto& s : states_) j["states"].push_back(state_to_json(s));
    j["history"] = json::array();
    for (const auto& h : history_) {
        j["history"].push_back({{"sample_index", h.sample_index},
                                {"class", h.class_name},
                                {"reason", h.reason},
                                {"descriptions", h.descriptions}});
    }
    j["transcript"] = json::array();
    std::istringstream lines(transcript_.to_jsonl());
    for (std::string line; std::getline(lines, line);) {
        if (!line.empty()) j["transcript"].push_back(json::parse(line));
    }
    return j.dump(2);
}

TrainingSession TrainingSession::restore(std::string_view checkpoint, std::shared_ptr<llm::Backend> backend) {
    json j;
    try {
        j = json::parse(checkpoint);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::validation, std::string("session checkpoint is not valid JSON: ") + e.what());
    }
    const int version = j.value("schema_version", 0);
    if (version != kSchemaVersion) {
        throw Error(ErrorCode::migration,
                    "session checkpoint schema " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kSchemaVersion) + ")",
                    {{"found", std::to_string(version)}, {"expected", std::to_string(kSchemaVersion)}});
    }
    try {
        TrainingSession s;
        s.spec0_ = j.at("spec0").get<promptkit::ClassifierSpec>();
        s.spec_ = j.at("spec").get<promptkit::ClassifierSpec>();
        s.config_ = j.at("config").get<Config>();
        s.cursor_ = j.at("cursor").get<std::size_t>();
        for (const auto& st : j.at("states")) s.states_.push_back(state_from_json(st));
        for (const auto& h : j.at("history")) {
            s.history_.push_back({h.at("sample_index").get<std::size_t>(), h.at("class").get<std::string>(),
                                  h.at("reason").get<std::string>(),
                                  h.at("descriptions").get<std::vector<std::string>>()});
        }
        std::string jsonl;
        for (const auto& e : j.at("transcript")) jsonl += e.dump() + "\n";
        const auto restored = llm::Transcript::from_jsonl(jsonl);
        for (const auto& e : restored.entries()) s.transcript_.append_recorded(e);
        s.backend_ = std::move(backend);
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::validation, std::string("malformed session checkpoint: ") + e.what());
    }
}

}  // namespace byoc::trainer
