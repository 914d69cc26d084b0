#include <fstream>
#include <sstream>

#include "byoc/classifier.hpp"
#include "byoc/corpus.hpp"
#include "byoc/evalharness.hpp"
#include "byoc/gateway.hpp"
#include "byoc/serialize.hpp"

namespace byoc::gateway {

using nlohmann::json;

const char* to_string(ApiCode code) {
    switch (code) {
        case ApiCode::validation: return "validation";
        case ApiCode::state: return "state";
        case ApiCode::parse: return "parse";
        case ApiCode::backend: return "backend";
        case ApiCode::not_found: return "not_found";
    }
    return "validation";
}

ApiCode api_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::validation:
        case ErrorCode::config:
        case ErrorCode::migration: return ApiCode::validation;
        case ErrorCode::state:
        case ErrorCode::conflict: return ApiCode::state;
        case ErrorCode::parse:
        case ErrorCode::classification: return ApiCode::parse;
        case ErrorCode::backend:
        case ErrorCode::io: return ApiCode::backend;
        case ErrorCode::not_found: return ApiCode::not_found;
    }
    return ApiCode::validation;
}

int http_status(ApiCode code) {
    switch (code) {
        case ApiCode::validation: return 400;
        case ApiCode::state: return 409;
        case ApiCode::parse: return 422;
        case ApiCode::backend: return 502;
        case ApiCode::not_found: return 404;
    }
    return 500;
}

json error_body(const Error& e) {
    json detail = json::object();
    for (const auto& [k, v] : e.detail()) detail[k] = v;
    detail["kind"] = byoc::to_string(e.code());
    return {{"error", {{"code", to_string(api_code(e.code()))}, {"message", e.what()}, {"detail", detail}}}};
}

std::shared_ptr<llm::Backend> make_backend(const std::string& spec, const Config& config) {
    if (spec == "live") return std::make_shared<llm::LiveBackend>(llm::LiveConfig::from_env(), config.counter());
    if (spec.rfind("mock:", 0) == 0 && spec.size() > 5) {
        return std::make_shared<llm::MockBackend>(llm::load_script(spec.substr(5)), config.counter());
    }
    throw Error(ErrorCode::config, "backend must be 'live' or 'mock:<script.jsonl>', got '" + spec + "'");
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        auto c = json::parse(ss.str()).get<Config>();
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config, "config file " + path + ": " + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::config, "config file " + path + ": " + e.what());
    }
}

namespace {

template <typename T>
T field(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key)) {
        throw Error(ErrorCode::validation, std::string("request body is missing '") + key + "'", {{"field", key}});
    }
    try {
        return body.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::validation, std::string("field '") + key + "': " + e.what(), {{"field", key}});
    }
}

Config merged_config(const Config& defaults, const json& body) {
    if (!body.is_object() || !body.contains("config")) return defaults;
    const json& overlay = body["config"];
    if (!overlay.is_object()) throw Error(ErrorCode::validation, "'config' must be an object");
    json base = defaults;
    for (const auto& [k, v] : overlay.items()) base[k] = v;
    try {
        auto c = base.get<Config>();
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::validation, std::string("config: ") + e.what());
    }
}

corpus::Dataset inline_dataset(const json& items, corpus::Split split, bool need_label) {
    if (!items.is_array()) throw Error(ErrorCode::validation, "samples must be an array");
    std::vector<corpus::LabeledSample> out;
    for (std::size_t k = 0; k < items.size(); ++k) {
        const json& it = items[k];
        corpus::LabeledSample rec;
        if (it.is_string()) {
            rec.sample.text = it.get<std::string>();
        } else if (it.is_object()) {
            rec.sample.text = it.value("text", std::string());
            rec.sample.id = it.value("id", std::string());
            rec.label = it.value("label", std::string());
            auto kind = corpus::parse_text_kind(it.value("kind", std::string("plain")));
            if (!kind) throw Error(ErrorCode::validation, "sample " + std::to_string(k) + " has an unknown kind");
            rec.sample.text = corpus::normalize_text(rec.sample.text, *kind);
        } else {
            throw Error(ErrorCode::validation, "sample " + std::to_string(k) + " must be a string or object");
        }
        if (rec.sample.id.empty()) rec.sample.id = "sample-" + std::to_string(k + 1);
        if (need_label && rec.label.empty()) {
            throw Error(ErrorCode::validation, "sample " + rec.sample.id + " has no label");
        }
        out.push_back(std::move(rec));
    }
    return corpus::Dataset(std::move(out), split);
}

corpus::Dataset select(const corpus::Dataset& d, const json& ids) {
    if (!ids.is_array()) throw Error(ErrorCode::validation, "sample_ids must be an array");
    std::vector<corpus::LabeledSample> out;
    for (const auto& id : ids) {
        const auto want = id.get<std::string>();
        bool found = false;
        for (std::size_t i = 0; i < d.size() && !found; ++i) {
            if (d[i].sample.id == want) {
                out.push_back(d[i]);
                found = true;
            }
        }
        if (!found) throw Error(ErrorCode::not_found, "dataset has no sample '" + want + "'", {{"id", want}});
    }
    return corpus::Dataset(std::move(out), d.split());
}

corpus::Dataset dataset_from(const json& body, const char* inline_key, const char* path_key, corpus::Split split,
                             bool need_label) {
    if (body.contains(inline_key)) return inline_dataset(body[inline_key], split, need_label);
    if (body.contains(path_key) && body[path_key].is_string()) {
        auto d = corpus::load_dataset(body[path_key].get<std::string>(), split);
        if (body.contains("sample_ids")) d = select(d, body["sample_ids"]);
        return d;
    }
    throw Error(ErrorCode::validation,
                std::string("request needs '") + inline_key + "' or a '" + path_key + "' path", {{"field", inline_key}});
}

json state_json(const trainer::SampleState& s) {
    json j;
    j["id"] = s.sample.id;
    j["text"] = s.sample.text;
    j["phase"] = trainer::to_string(s.phase);
    j["qa"] = s.qa;
    j["predicted_class"] = s.predicted_class ? json(*s.predicted_class) : json(nullptr);
    j["predicted_raw"] = s.predicted_raw;
    j["model_thoughts"] = s.model_thoughts;
    j["model_explanation"] = s.model_explanation;
    j["user_label"] = s.user_label;
    j["user_explanation"] = s.user_explanation;
    j["abstained"] = s.abstained();
    return j;
}

json prediction_json(const trainer::SampleState& s) {
    return {{"class", s.predicted_class ? json(*s.predicted_class) : json(nullptr)},
            {"raw_class", s.predicted_raw},
            {"thoughts", s.model_thoughts},
            {"reflection", s.model_explanation},
            {"abstained", s.abstained()}};
}

}  // namespace

json session_snapshot(const std::string& id, const trainer::TrainingSession& s) {
    json j;
    j["session_id"] = id;
    j["cursor"] = s.cursor();
    j["complete"] = s.complete();
    j["questions_per_sample"] = s.config().questions_per_sample;
    j["expected_questions"] = s.expected_questions();
    j["spec"] = s.spec();
    j["initial_spec"] = s.initial_spec();
    j["current"] = s.complete() ? json(nullptr) : state_json(s.current());
    j["samples"] = json::array();
    for (const auto& st : s.states()) j["samples"].push_back(state_json(st));
    j["history"] = json::array();
    for (const auto& h : s.history()) {
        j["history"].push_back({{"sample_index", h.sample_index},
                                {"class", h.class_name},
                                {"reason", h.reason},
                                {"descriptions", h.descriptions}});
    }
    j["tokens"] = {{"prompt", s.transcript().prompt_tokens()}, {"output", s.transcript().output_tokens()}};
    j["calls"] = s.transcript().size();
    return j;
}

Engine::Engine(std::shared_ptr<store::Store> store, std::shared_ptr<llm::Backend> backend, Config defaults)
    : store_(std::move(store)), backend_(std::move(backend)), defaults_(std::move(defaults)) {
    if (!store_) throw Error(ErrorCode::config, "engine needs a store");
    if (!backend_) throw Error(ErrorCode::config, "engine needs a backend");
    defaults_.validate();
}

std::shared_ptr<Engine::Slot> Engine::slot(const std::string& id) {
    std::lock_guard lock(slots_mu_);
    auto& s = slots_[id];
    if (!s) s = std::make_shared<Slot>();
    return s;
}

void Engine::checkpoint(const std::string& id, const trainer::TrainingSession& s) {
    store_->save_session(id, s.checkpoint());
}

template <typename F>
json Engine::with_session(const std::string& id, F&& fn) {
    auto sl = slot(id);
    std::lock_guard lock(sl->mu);
    if (!sl->session) {
        auto restored = trainer::TrainingSession::restore(store_->load_session(id), backend_);
        sl->session = std::make_unique<trainer::TrainingSession>(std::move(restored));
    }
    trainer::TrainingSession& s = *sl->session;
    const std::string before = s.checkpoint();
    try {
        json out = fn(s);
        checkpoint(id, s);
        return out;
    } catch (...) {
        if (s.checkpoint() != before) checkpoint(id, s);
        throw;
    }
}

json Engine::create_session(const json& body) {
    const auto spec0 = field<promptkit::ClassifierSpec>(body, "spec0");
    const Config config = merged_config(defaults_, body);
    const auto data = dataset_from(body, "samples", "dataset", corpus::Split::train, false);
    std::vector<corpus::Sample> samples;
    for (std::size_t i = 0; i < data.size(); ++i) samples.push_back(data[i].sample);

    auto session = trainer::TrainingSession::start(spec0, std::move(samples), config, backend_);
    const std::string id = store_->new_session_id();
    checkpoint(id, session);
    auto sl = slot(id);
    std::lock_guard lock(sl->mu);
    sl->session = std::make_unique<trainer::TrainingSession>(std::move(session));
    return {{"session_id", id}, {"session", session_snapshot(id, *sl->session)}};
}

json Engine::snapshot(const std::string& id) {
    return with_session(id, [&](trainer::TrainingSession& s) { return session_snapshot(id, s); });
}

json Engine::question(const std::string& id) {
    return with_session(id, [](trainer::TrainingSession& s) {
        const auto q = s.next_question();
        return json{{"question", q.question}, {"explanation", q.explanation}};
    });
}

json Engine::answer(const std::string& id, const json& body) {
    const auto text = field<std::string>(body, "answer");
    return with_session(id, [&](trainer::TrainingSession& s) {
        const auto phase = s.submit_answer(text);
        json out{{"phase", trainer::to_string(phase)}};
        if (phase == trainer::Phase::predicted) out["prediction"] = prediction_json(s.current());
        return out;
    });
}

json Engine::predict(const std::string& id) {
    return with_session(id, [](trainer::TrainingSession& s) {
        s.predict_current();
        return json{{"phase", trainer::to_string(s.current().phase)}, {"prediction", prediction_json(s.current())}};
    });
}

json Engine::label(const std::string& id, const json& body) {
    const auto cls = field<std::string>(body, "class");
    const std::string explanation = body.value("explanation", std::string());
    return with_session(id, [&](trainer::TrainingSession& s) {
        const auto updated = s.submit_label(cls, explanation);
        json desc = json::object();
        for (const auto& c : s.spec().classes) desc[c.name] = updated.at(c.name);
        return json{{"updated_descriptions", desc}, {"complete", s.complete()}, {"cursor", s.cursor()}};
    });
}

json Engine::finalize(const std::string& id, const json& body) {
    const auto name = field<std::string>(body, "name");
    std::map<std::string, std::string> edits;
    if (body.contains("edits")) edits = field<std::map<std::string, std::string>>(body, "edits");
    const bool replace = body.value("replace", false);
    return with_session(id, [&](trainer::TrainingSession& s) {
        auto artifact = s.finalize(edits, name);
        const std::string artifact_id = store::slugify(artifact.name);
        artifact.provenance.transcript_ref = artifact_id;
        store_->save(artifact, replace);
        store_->save_transcript(artifact_id, s.transcript());
        return json{{"artifact_id", artifact_id}};
    });
}

json Engine::list_classifiers() {
    json out = json::array();
    for (const auto& info : store_->list(store::Kind::artifact)) {
        out.push_back({{"id", info.id}, {"name", info.name}, {"created_at_ms", info.created_at_ms}});
    }
    return {{"classifiers", out}};
}

json Engine::get_classifier(const std::string& id) { return json::parse(store_->payload(store::Kind::artifact, id)); }

json Engine::classify(const std::string& artifact_id, const json& body) {
    const auto artifact = store_->load_artifact(artifact_id);
    std::string text = field<std::string>(body, "text");
    if (body.contains("kind")) {
        auto kind = corpus::parse_text_kind(field<std::string>(body, "kind"));
        if (!kind) throw Error(ErrorCode::validation, "unknown text kind");
        text = corpus::normalize_text(text, *kind);
    }
    llm::Transcript transcript;
    const auto out = classifier::predict(artifact, text, *backend_, transcript);
    return out;
}

json Engine::create_evaluation(const json& body) {
    evalharness::EvalRequest req;
    const auto method = classifier::parse_baseline_kind(field<std::string>(body, "method"));
    if (!method) throw Error(ErrorCode::validation, "unknown method " + body["method"].dump(), {{"field", "method"}});
    req.method = *method;
    if (body.contains("artifact_id")) req.artifact = store_->load_artifact(field<std::string>(body, "artifact_id"));
    if (body.contains("spec")) req.spec = field<promptkit::ClassifierSpec>(body, "spec");
    req.config = req.artifact ? req.artifact->config : defaults_;
    if (body.contains("config")) req.config = merged_config(req.config, body);
    if (body.contains("demos")) {
        req.demos = field<std::vector<classifier::Demo>>(body, "demos");
    } else if (body.contains("demos_from_session")) {
        const auto sid = field<std::string>(body, "demos_from_session");
        req.demos = with_session(sid, [](trainer::TrainingSession& s) { return json(s.demos()); })
                        .get<std::vector<classifier::Demo>>();
    }
    req.budget = body.value("budget", std::size_t{0});
    const auto split = dataset_from(body, "samples", "split", corpus::Split::test, true);

    const bool parallel = body.value("parallel", true);
    auto run = parallel ? evalharness::evaluate(req, split, *backend_)
                        : evalharness::evaluate_serial(req, split, *backend_);
    const std::string id = store_->new_report_id();
    store_->save(run.report, id);
    store_->save_transcript(id, run.transcript);
    json summary = run.report;
    summary.erase("records");
    return {{"report_id", id}, {"report", summary}};
}

json Engine::get_evaluation(const std::string& id) { return json::parse(store_->payload(store::Kind::report, id)); }

void Engine::flush() {
    std::vector<std::pair<std::string, std::shared_ptr<Slot>>> all;
    {
        std::lock_guard lock(slots_mu_);
        all.assign(slots_.begin(), slots_.end());
    }
    for (auto& [id, sl] : all) {
        std::lock_guard lock(sl->mu);
        if (sl->session) checkpoint(id, *sl->session);
    }
}

}  // namespace byoc::gateway
