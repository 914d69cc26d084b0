#include "byoc/evalharness.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "byoc/error.hpp"
#include "byoc/serialize.hpp"

namespace byoc::evalharness {

using nlohmann::json;
using classifier::BaselineKind;

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::correct: return "correct";
        case Outcome::incorrect: return "incorrect";
        case Outcome::abstained: return "abstained";
        case Outcome::error: return "error";
    }
    return "error";
}

void EvalRequest::validate() const {
    config.validate();
    if (method == BaselineKind::byoc && !artifact) {
        throw Error(ErrorCode::validation, "byoc evaluation needs a classifier artifact");
    }
    if (method != BaselineKind::byoc && !artifact && !spec) {
        throw Error(ErrorCode::validation, std::string(classifier::to_string(method)) +
                                               " evaluation needs a classifier spec or artifact");
    }
    const bool few_shot = method == BaselineKind::few_shot || method == BaselineKind::few_shot_explanation ||
                          method == BaselineKind::few_shot_qa;
    if (few_shot && demos.empty()) {
        throw Error(ErrorCode::validation, std::string(classifier::to_string(method)) + " evaluation needs demos");
    }
}

namespace {

struct Plan {
    promptkit::ClassifierSpec spec;
    Config config;
    std::size_t budget = 0;
};

Plan plan_for(const EvalRequest& request) {
    Plan p;
    if (request.artifact) {
        p.config = request.artifact->config;
        p.spec = request.artifact->spec;
        const auto& hist = request.artifact->provenance.description_history;
        if (request.method != BaselineKind::byoc && !request.spec && !hist.empty() &&
            hist.front().size() == p.spec.classes.size()) {
            for (std::size_t k = 0; k < p.spec.classes.size(); ++k) p.spec.classes[k].description = hist.front()[k];
        }
    } else {
        p.config = request.config;
    }
    if (request.spec && request.method != BaselineKind::byoc) p.spec = *request.spec;
    p.budget = request.budget > 0 ? request.budget : static_cast<std::size_t>(p.config.context_window);
    return p;
}

void check_split(const corpus::Dataset& split) {
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i].label.empty()) {
            throw Error(ErrorCode::validation, "evaluation split has an unlabeled sample " + split[i].sample.id,
                        {{"id", split[i].sample.id}});
        }
    }
}

SampleRecord run_one(const EvalRequest& request, const Plan& plan, const corpus::LabeledSample& rec,
                     llm::Backend& backend, llm::Transcript& local) {
    SampleRecord r;
    r.id = rec.sample.id;
    r.gold = rec.label;
    try {
        classifier::PredictionOutcome out;
        if (request.method == BaselineKind::byoc) {
            out = classifier::predict(*request.artifact, rec.sample.text, backend, local);
        } else {
            classifier::BaselineInputs inputs;
            inputs.budget = plan.budget;
            inputs.config = plan.config;
            inputs.backend = &backend;
            inputs.transcript = &local;
            const auto prompt = classifier::build_baseline_prompt(request.method, plan.spec, request.demos,
                                                                  rec.sample.text, inputs);
            out = classifier::run_prompt(prompt.bundle, plan.spec, backend, local);
        }
        r.predicted = out.class_name;
        r.outcome = out.class_name == r.gold ? Outcome::correct : Outcome::incorrect;
    } catch (const Error& e) {
        r.message = e.what();
        if (e.code() == ErrorCode::classification) {
            r.outcome = Outcome::abstained;
            if (auto it = e.detail().find("raw_class"); it != e.detail().end()) r.predicted = it->second;
        } else {
            r.outcome = Outcome::error;
        }
    } catch (const std::exception& e) {
        r.message = e.what();
        r.outcome = Outcome::error;
    }
    r.prompt_tokens = local.prompt_tokens();
    r.output_tokens = local.output_tokens();
    r.calls = local.size();
    return r;
}

EvalReport aggregate(const EvalRequest& request, std::vector<SampleRecord> records) {
    EvalReport rep;
    rep.method = request.method;
    rep.n = records.size();
    for (const auto& r : records) {
        rep.correct += r.outcome == Outcome::correct;
        rep.abstentions += r.outcome == Outcome::abstained;
        rep.errors += r.outcome == Outcome::error;
        rep.prompt_tokens += r.prompt_tokens;
        rep.output_tokens += r.output_tokens;
    }
    rep.accuracy = rep.n ? static_cast<double>(rep.correct) / static_cast<double>(rep.n) : 0.0;
    rep.mean_run_tokens = rep.n ? static_cast<double>(rep.prompt_tokens) / static_cast<double>(rep.n) : 0.0;
    rep.build_tokens = request.method == BaselineKind::byoc ? request.artifact->provenance.build_tokens : 0;
    rep.incomplete = rep.errors > 0;
    rep.records = std::move(records);
    return rep;
}

}  // namespace

EvalRun evaluate_serial(const EvalRequest& request, const corpus::Dataset& split, llm::Backend& backend) {
    request.validate();
    check_split(split);
    const Plan plan = plan_for(request);
    EvalRun run;
    std::vector<SampleRecord> records;
    for (std::size_t i = 0; i < split.size(); ++i) {
        llm::Transcript local;
        records.push_back(run_one(request, plan, split[i], backend, local));
        run.transcript.extend(local);
    }
    run.report = aggregate(request, std::move(records));
    return run;
}

EvalRun evaluate(const EvalRequest& request, const corpus::Dataset& split, llm::Backend& backend) {
    request.validate();
    check_split(split);
    const Plan plan = plan_for(request);
    const auto n = static_cast<std::ptrdiff_t>(split.size());
    std::vector<SampleRecord> records(split.size());
    std::vector<llm::Transcript> locals(split.size());

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        records[k] = run_one(request, plan, split[k], backend, locals[k]);
    }

    EvalRun run;
    for (const auto& t : locals) run.transcript.extend(t);
    run.report = aggregate(request, std::move(records));
    return run;
}

std::string compare(std::vector<EvalReport> reports) {
    if (reports.empty()) throw Error(ErrorCode::validation, "compare needs at least one report");
    auto rank = [](BaselineKind k) {
        return std::find(std::begin(classifier::kAllKinds), std::end(classifier::kAllKinds), k) -
               std::begin(classifier::kAllKinds);
    };
    std::stable_sort(reports.begin(), reports.end(),
                     [&](const EvalReport& a, const EvalReport& b) { return rank(a.method) < rank(b.method); });

    std::vector<std::vector<std::string>> rows{{"Approach", "Build tokens", "Run tokens", "Accuracy", "n",
                                                "Abstained", "Errors"}};
    for (const auto& r : reports) {
        std::ostringstream run, acc;
        run << std::fixed << std::setprecision(1) << r.mean_run_tokens;
        acc << std::fixed << std::setprecision(1) << r.accuracy * 100.0 << "%";
        rows.push_back({classifier::to_string(r.method), std::to_string(r.build_tokens), run.str(), acc.str(),
                        std::to_string(r.n), std::to_string(r.abstentions),
                        std::to_string(r.errors) + (r.incomplete ? " (incomplete)" : "")});
    }
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == 0) {
                out << std::left << std::setw(static_cast<int>(width[c])) << row[c];
            } else {
                out << "  " << std::right << std::setw(static_cast<int>(width[c])) << row[c];
            }
        }
        out << "\n";
    };
    emit(rows.front());
    std::size_t total = 0;
    for (auto w : width) total += w;
    out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
    for (std::size_t i = 1; i < rows.size(); ++i) emit(rows[i]);
    return out.str();
}

std::string export_reports(const std::vector<EvalReport>& reports) {
    std::string out;
    for (const auto& r : reports) {
        json head = r;
        head.erase("records");
        head["type"] = "report";
        out += head.dump() + "\n";
        for (const auto& rec : r.records) {
            json line = rec;
            line["type"] = "record";
            line["method"] = classifier::to_string(r.method);
            out += line.dump() + "\n";
        }
    }
    return out;
}

std::vector<EvalReport> import_reports(std::string_view jsonl) {
    std::vector<EvalReport> out;
    std::istringstream in{std::string(jsonl)};
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json j = json::parse(line);
            const std::string type = j.value("type", std::string());
            j.erase("type");
            if (type == "report") {
                out.push_back(j.get<EvalReport>());
            } else if (type == "record") {
                if (out.empty()) throw Error(ErrorCode::parse, "record line before any report line");
                j.erase("method");
                out.back().records.push_back(j.get<SampleRecord>());
            } else {
                throw Error(ErrorCode::parse, "unknown line type '" + type + "'");
            }
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse, std::string("report export: ") + e.what(),
                        {{"line", std::to_string(lineno)}});
        } catch (Error& e) {
            throw Error(e.code(), e.what(), {{"line", std::to_string(lineno)}});
        }
    }
    return out;
}

}  // namespace byoc::evalharness
