#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "byoc/evalharness.hpp"
#include "byoc/gateway.hpp"
#include "byoc/serialize.hpp"

namespace byoc::gateway {

using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path, std::istream& in) {
    if (path == "-") {
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::not_found, "cannot read " + path, {{"path", path}});
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json read_json(const std::string& path, std::istream& in) {
    try {
        return json::parse(read_text(path, in));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::validation, path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::io, "cannot write " + path);
    f << text;
}

std::vector<classifier::Demo> read_demos(const std::string& path, std::istream& in) {
    const std::string text = read_text(path, in);
    const auto first = text.find_first_not_of(" \t\r\n");
    try {
        if (first != std::string::npos && text[first] == '[') {
            return json::parse(text).get<std::vector<classifier::Demo>>();
        }
        std::vector<classifier::Demo> out;
        std::istringstream lines(text);
        for (std::string line; std::getline(lines, line);) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                out.push_back(json::parse(line).get<classifier::Demo>());
            }
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::validation, "demos file " + path + ": " + e.what());
    }
}

bool prompt_line(std::istream& in, std::ostream& out, const std::string& prompt, std::string& line) {
    out << prompt << std::flush;
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

void require_input(bool ok) {
    if (!ok) throw Error(ErrorCode::state, "input ended before the session was complete");
}

struct Globals {
    std::string store = "byoc-store";
    std::string backend = "live";
    std::string config;
    std::string host = "127.0.0.1";
    int port = 8080;
};

// Setup failures (bad config file, unknown backend) are usage errors.
struct Context {
    Config config;
    std::shared_ptr<store::Store> store;
    std::shared_ptr<llm::Backend> backend;

    Context(const Globals& g, bool need_backend) {
        try {
            if (!g.config.empty()) config = load_config(g.config);
            if (need_backend) backend = make_backend(g.backend, config);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::config) throw UsageError(e.what());
            throw;
        }
        store = std::make_shared<store::Store>(g.store);
    }

    std::shared_ptr<Engine> engine() const { return std::make_shared<Engine>(store, backend, config); }
};

int train(const Globals& g, const std::string& spec_path, const std::string& data_path, const std::string& name,
          const std::string& edits_path, bool replace, std::istream& in, std::ostream& out) {
    Context ctx(g, true);
    const auto owner = ctx.engine();
    Engine& engine = *owner;
    json body;
    body["spec0"] = read_json(spec_path, in);
    body["dataset"] = data_path;
    const std::string sid = engine.create_session(body).at("session_id").get<std::string>();
    out << "session " << sid << "\n";

    for (;;) {
        json snap = engine.snapshot(sid);
        if (snap["complete"].get<bool>()) break;
        const json& cur = snap["current"];
        const std::size_t total = snap["samples"].size();
        const int m = snap["questions_per_sample"].get<int>();
        out << "\n=== Sample " << snap["cursor"].get<std::size_t>() + 1 << "/" << total << " ("
            << cur["id"].get<std::string>() << ") ===\n"
            << cur["text"].get<std::string>() << "\n";

        std::string phase = cur["phase"].get<std::string>();
        std::size_t asked = cur["qa"].size();
        if (phase == "asking" && asked > 0 && cur["qa"].back()["answer"].get<std::string>().empty()) {
            const auto& q = cur["qa"].back();
            out << "\nQ" << asked << ": " << q["question"].get<std::string>() << "\n"
                << "   (" << q["model_explanation"].get<std::string>() << ")\n";
            std::string answer;
            require_input(prompt_line(in, out, "> ", answer));
            phase = engine.answer(sid, {{"answer", answer}}).at("phase").get<std::string>();
        }
        while (phase == "asking" && static_cast<int>(engine.snapshot(sid)["current"]["qa"].size()) < m) {
            json q = engine.question(sid);
            ++asked;
            out << "\nQ" << asked << ": " << q["question"].get<std::string>() << "\n"
                << "   (" << q["explanation"].get<std::string>() << ")\n";
            std::string answer;
            require_input(prompt_line(in, out, "> ", answer));
            phase = engine.answer(sid, {{"answer", answer}}).at("phase").get<std::string>();
        }
        if (phase == "asking") phase = engine.predict(sid).at("phase").get<std::string>();

        snap = engine.snapshot(sid);
        const json& st = snap["current"];
        if (st["predicted_class"].is_null()) {
            out << "\nThe model could not decide (it answered \"" << st["predicted_raw"].get<std::string>()
                << "\").\n";
        } else {
            out << "\nPrediction: " << st["predicted_class"].get<std::string>() << "\n";
        }
        out << "Reasoning: " << st["model_explanation"].get<std::string>() << "\n";

        std::string names;
        for (const auto& c : snap["spec"]["classes"]) names += (names.empty() ? "" : "/") + c["name"].get<std::string>();
        for (;;) {
            std::string label, why;
            require_input(prompt_line(in, out, "Label [" + names + "]: ", label));
            require_input(prompt_line(in, out, "Explanation (blank keeps the model's reasoning): ", why));
            try {
                json res = engine.label(sid, {{"class", label}, {"explanation", why}});
                out << "Updated descriptions:\n";
                for (const auto& [cls, d] : res["updated_descriptions"].items()) {
                    out << "  " << cls << ": " << d.get<std::string>() << "\n";
                }
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::validation) throw;
                out << e.what() << "\n";
            }
        }
    }

    json fin{{"name", name}, {"replace", replace}};
    if (!edits_path.empty()) fin["edits"] = read_json(edits_path, in);
    const std::string id = engine.finalize(sid, fin).at("artifact_id").get<std::string>();
    out << "\nSaved classifier " << id << "\n";
    return 0;
}

int classify(const Globals& g, const std::string& artifact, const std::string& input, const std::string& kind,
             bool as_json, std::istream& in, std::ostream& out) {
    Context ctx(g, true);
    const auto owner = ctx.engine();
    Engine& engine = *owner;
    json body{{"text", read_text(input, in)}, {"kind", kind}};
    json res = engine.classify(artifact, body);
    if (as_json) {
        out << res.dump(2) << "\n";
    } else {
        out << res["class"].get<std::string>() << "\n" << res["reflection"].get<std::string>() << "\n";
    }
    return 0;
}

int evaluate(const Globals& g, const std::string& method, const std::string& artifact, const std::string& spec,
             const std::string& split, const std::string& demos, const std::string& out_path, std::size_t budget,
             bool serial, std::istream& in, std::ostream& out) {
    Context ctx(g, true);
    const auto kind = classifier::parse_baseline_kind(method);
    if (!kind) throw UsageError("unknown method '" + method + "'");
    evalharness::EvalRequest req;
    req.method = *kind;
    req.config = ctx.config;
    if (!artifact.empty()) {
        req.artifact = ctx.store->load_artifact(artifact);
        if (g.config.empty()) req.config = req.artifact->config;
    }
    if (!spec.empty()) {
        try {
            req.spec = read_json(spec, in).get<promptkit::ClassifierSpec>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::validation, "spec file " + spec + ": " + e.what());
        }
    }
    if (!demos.empty()) req.demos = read_demos(demos, in);
    req.budget = budget;
    const auto data = corpus::load_dataset(split, corpus::Split::test);
    const auto run = serial ? evalharness::evaluate_serial(req, data, *ctx.backend)
                            : evalharness::evaluate(req, data, *ctx.backend);
    if (!out_path.empty()) write_text(out_path, evalharness::export_reports({run.report}), out);
    out << evalharness::compare({run.report});
    return 0;
}

int compare(const std::vector<std::string>& files, const std::string& out_path, std::istream& in,
            std::ostream& out) {
    std::vector<evalharness::EvalReport> reports;
    for (const auto& f : files) {
        for (auto& r : evalharness::import_reports(read_text(f, in))) reports.push_back(std::move(r));
    }
    if (!out_path.empty()) write_text(out_path, evalharness::export_reports(reports), out);
    out << evalharness::compare(reports);
    return 0;
}

int serve(const Globals& g, std::ostream& out) {
    Context ctx(g, true);
    auto engine = ctx.engine();
    Server server(engine);
    const int port = server.start(g.host, g.port);
    out << "listening on " << g.host << ":" << port << std::endl;
    g_interrupted = false;
    auto old_int = std::signal(SIGINT, on_signal);
    auto old_term = std::signal(SIGTERM, on_signal);
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    std::signal(SIGINT, old_int);
    std::signal(SIGTERM, old_term);
    out << "stopped; sessions flushed" << std::endl;
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Co-author text classifiers with a language model, then run and evaluate them.", "byoc"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--store", g.store, "Store directory")->capture_default_str();
    app.add_option("--backend", g.backend, "live or mock:<script.jsonl>")->capture_default_str();
    app.add_option("--config", g.config, "JSON config file");
    app.add_option("--port", g.port, "HTTP port for serve (0 picks one)")->capture_default_str();
    app.add_option("--host", g.host, "HTTP bind address for serve")->capture_default_str();

    std::string spec, data, name, edits, artifact, input = "-", kind = "plain", method, split, demos, out_path;
    bool replace = false, as_json = false, serial = false;
    std::size_t budget = 0;
    std::vector<std::string> files;

    auto* train_cmd = app.add_subcommand("train", "Interactive training session on the terminal");
    train_cmd->add_option("--spec", spec, "Classifier spec JSON (purpose, classes)")->required();
    train_cmd->add_option("--data", data, "Training samples (JSONL)")->required();
    train_cmd->add_option("--name", name, "Name for the saved classifier")->required();
    train_cmd->add_option("--edits", edits, "JSON object of final description overrides");
    train_cmd->add_flag("--replace", replace, "Overwrite an existing classifier with the same name");

    auto* classify_cmd = app.add_subcommand("classify", "Classify one text with a saved classifier");
    classify_cmd->add_option("--artifact", artifact, "Classifier id")->required();
    classify_cmd->add_option("--in", input, "Input file, - for stdin")->capture_default_str();
    classify_cmd->add_option("--kind", kind, "plain or html")->capture_default_str();
    classify_cmd->add_flag("--json", as_json, "Print the full outcome as JSON");

    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a method on a labeled split");
    eval_cmd->add_option("--method", method, "zero_shot, zero_shot_summary, few_shot, few_shot_explanation, "
                                             "few_shot_qa or byoc")
        ->required();
    eval_cmd->add_option("--artifact", artifact, "Classifier id");
    eval_cmd->add_option("--spec", spec, "Initial spec JSON for baselines");
    eval_cmd->add_option("--split", split, "Labeled samples (JSONL)")->required();
    eval_cmd->add_option("--demos", demos, "Demonstrations (JSON array or JSONL)");
    eval_cmd->add_option("--out", out_path, "Write the report export (JSONL)");
    eval_cmd->add_option("--budget", budget, "Prompt token budget (default: context window)");
    eval_cmd->add_flag("--serial", serial, "Evaluate samples one at a time");

    auto* compare_cmd = app.add_subcommand("compare", "Tabulate exported reports");
    compare_cmd->add_option("reports", files, "Report exports (JSONL)")->required();
    compare_cmd->add_option("--out", out_path, "Write the merged export");

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");

    auto* export_cmd = app.add_subcommand("export", "Write a classifier artifact to a file");
    export_cmd->add_option("--artifact", artifact, "Classifier id")->required();
    export_cmd->add_option("--out", out_path, "Output file, - for stdout")->capture_default_str();

    auto* import_cmd = app.add_subcommand("import", "Add an exported classifier to the store");
    import_cmd->add_option("--in", input, "Artifact file, - for stdin")->capture_default_str();
    import_cmd->add_flag("--replace", replace, "Overwrite an existing classifier with the same name");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return 2;
    }

    try {
        if (*train_cmd) return train(g, spec, data, name, edits, replace, in, out);
        if (*classify_cmd) return classify(g, artifact, input, kind, as_json, in, out);
        if (*eval_cmd) return evaluate(g, method, artifact, spec, split, demos, out_path, budget, serial, in, out);
        if (*compare_cmd) return compare(files, out_path, in, out);
        if (*serve_cmd) return serve(g, out);
        if (*export_cmd) {
            Context ctx(g, false);
            write_text(out_path, ctx.store->payload(store::Kind::artifact, artifact) + "\n", out);
            return 0;
        }
        if (*import_cmd) {
            Context ctx(g, false);
            const auto a = store::artifact_from_json(read_text(input, in));
            out << ctx.store->save(a, replace) << "\n";
            return 0;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return 2;
    } catch (const Error& e) {
        err << "error [" << to_string(api_code(e.code())) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace byoc::gateway
