#include <gtest/gtest.h>

#include <httplib.h>

#include <sstream>

#include "byoc/gateway.hpp"
#include "byoc/serialize.hpp"
#include "support.hpp"

using namespace byoc;
using nlohmann::json;
namespace t = byoc::testing;
namespace gw = byoc::gateway;

namespace {

constexpr int kM = 2;

std::string script_jsonl(const std::vector<llm::ScriptEntry>& script) {
    std::string out;
    for (const auto& e : script) {
        json j{{"reply", e.reply}};
        if (e.matcher.purpose) j["purpose"] = llm::to_string(*e.matcher.purpose);
        if (e.matcher.contains) j["contains"] = *e.matcher.contains;
        out += j.dump() + "\n";
    }
    return out;
}

json samples_json() {
    json arr = json::array();
    for (const auto& s : t::four_samples()) arr.push_back({{"id", s.id}, {"text", s.text}});
    return arr;
}

std::string samples_jsonl() {
    std::string out;
    for (const auto& s : samples_json()) out += s.dump() + "\n";
    return out;
}

json session_body() {
    return {{"spec0", t::email_spec()}, {"samples", samples_json()}, {"config", {{"questions_per_sample", kM}}}};
}

/// Everything a terminal user would type for the four samples.
std::string typed_session() {
    std::string in;
    for (std::size_t k = 0; k < 4; ++k) {
        for (std::size_t j = 0; j < static_cast<std::size_t>(kM); ++j) in += t::answer_text(k, j) + "\n";
        in += t::four_labels()[k] + "\n" + "Because of sample " + std::to_string(k + 1) + "\n";
    }
    return in;
}

// Runs sample k to the end of its label step through the engine.
void engine_sample(gw::Engine& e, const std::string& sid, std::size_t k) {
    for (std::size_t j = 0; j < static_cast<std::size_t>(kM); ++j) {
        e.question(sid);
        e.answer(sid, {{"answer", t::answer_text(k, j)}});
    }
    e.label(sid, {{"class", t::four_labels()[k]}, {"explanation", "Because of sample " + std::to_string(k + 1)}});
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args, const std::string& input = "") {
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = gw::run_cli(args, in, out, err);
    return {code, out.str(), err.str()};
}

class Gateway : public ::testing::Test {
protected:
    t::TempDir dir;

    std::shared_ptr<gw::Engine> engine(std::vector<llm::ScriptEntry> script) {
        return std::make_shared<gw::Engine>(std::make_shared<store::Store>(dir / "store"),
                                            llm::script_mock(std::move(script)), Config{});
    }

    std::string write(const std::string& name, const std::string& text) {
        t::write_file(dir / name, text);
        return (dir / name).string();
    }
};

json parse(const httplib::Result& r) { return json::parse(r->body); }

}  // namespace

TEST_F(Gateway, HttpEndToEnd) {
    auto eng = engine(t::training_script(kM));
    gw::Server server(eng);
    const int port = server.start("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    httplib::Client c("127.0.0.1", port);

    auto r = c.Post("/classifiers/sessions", session_body().dump(), "application/json");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200) << r->body;
    const std::string sid = parse(r)["session_id"];
    const std::string base = "/sessions/" + sid;

    // Answering before any question is a state error.
    r = c.Post(base + "/answer", json{{"answer", "x"}}.dump(), "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 409);
    EXPECT_EQ(parse(r)["error"]["code"], "state");

    for (std::size_t k = 0; k < 4; ++k) {
        for (std::size_t j = 0; j < static_cast<std::size_t>(kM); ++j) {
            r = c.Post(base + "/question", "{}", "application/json");
            ASSERT_EQ(r->status, 200) << r->body;
            EXPECT_EQ(parse(r)["question"], t::question_text(k, j));
            r = c.Post(base + "/answer", json{{"answer", t::answer_text(k, j)}}.dump(), "application/json");
            ASSERT_EQ(r->status, 200) << r->body;
        }
        const auto answered = parse(r);
        EXPECT_EQ(answered["phase"], "predicted");
        EXPECT_EQ(answered["prediction"]["class"], k == 1 ? "Important" : t::four_labels()[k]);
        r = c.Post(base + "/label",
                   json{{"class", t::four_labels()[k]}, {"explanation", "Because of sample " + std::to_string(k + 1)}}
                       .dump(),
                   "application/json");
        ASSERT_EQ(r->status, 200) << r->body;
        EXPECT_EQ(parse(r)["complete"], k == 3);
    }
    r = c.Get(base);
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(parse(r)["calls"], 4 * (kM + 2));

    r = c.Post(base + "/finalize", json{{"name", "Inbox triage"}}.dump(), "application/json");
    ASSERT_EQ(r->status, 200) << r->body;
    EXPECT_EQ(parse(r)["artifact_id"], "inbox-triage");

    r = c.Get("/classifiers");
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(parse(r)["classifiers"][0]["id"], "inbox-triage");

    r = c.Get("/classifiers/inbox-triage");
    ASSERT_EQ(r->status, 200);
    const auto artifact = parse(r).get<classifier::ClassifierArtifact>();
    EXPECT_EQ(artifact.spec.classes[0].description, t::updated_description(2, "Important"));
    EXPECT_EQ(artifact.provenance.transcript_ref, "inbox-triage");

    r = c.Get("/classifiers/nope");
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(parse(r)["error"]["code"], "not_found");
    r = c.Post("/classifiers/inbox-triage/classify", "{not json", "application/json");
    EXPECT_EQ(r->status, 400);
    r = c.Get("/no/such/route");
    EXPECT_EQ(r->status, 404);

    server.stop();
}

TEST_F(Gateway, ClassifyAndEvaluateOverHttp) {
    auto script = t::training_script(kM);
    script.push_back(t::entry(llm::PurposeTag::predict, t::predict_reply("Important", "Needs a reply"), "budget draft"));
    for (std::size_t k = 0; k < 4; ++k) {
        script.push_back(t::entry(llm::PurposeTag::predict, t::predict_reply(t::four_labels()[k]),
                                  t::four_samples()[k].text));
    }
    auto eng = engine(script);
    const std::string sid = eng->create_session(session_body())["session_id"];
    for (std::size_t k = 0; k < 4; ++k) engine_sample(*eng, sid, k);
    eng->finalize(sid, {{"name", "Inbox triage"}});

    gw::Server server(eng);
    httplib::Client c("127.0.0.1", server.start("127.0.0.1", 0));
    auto r = c.Post("/classifiers/inbox-triage/classify", json{{"text", "Please look at the budget draft"}}.dump(),
                    "application/json");
    ASSERT_EQ(r->status, 200) << r->body;
    EXPECT_EQ(parse(r)["class"], "Important");

    json samples = samples_json();
    for (std::size_t k = 0; k < 4; ++k) samples[k]["label"] = t::four_labels()[k];
    r = c.Post("/evaluations", json{{"method", "byoc"}, {"artifact_id", "inbox-triage"}, {"samples", samples}}.dump(),
               "application/json");
    ASSERT_EQ(r->status, 200) << r->body;
    const auto body = parse(r);
    EXPECT_DOUBLE_EQ(body["report"]["accuracy"].get<double>(), 1.0);
    r = c.Get("/evaluations/" + body["report_id"].get<std::string>());
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(parse(r)["records"].size(), 4u);

    r = c.Post("/evaluations", json{{"method", "sideways"}, {"samples", samples}}.dump(), "application/json");
    EXPECT_EQ(r->status, 400);
    server.stop();
}

TEST_F(Gateway, BackendFailureIs502) {
    auto eng = engine({});
    gw::Server server(eng);
    httplib::Client c("127.0.0.1", server.start("127.0.0.1", 0));
    const auto r = c.Post("/classifiers/sessions", session_body().dump(), "application/json");
    ASSERT_EQ(r->status, 200);
    const std::string sid = parse(r)["session_id"];
    const auto q = c.Post("/sessions/" + sid + "/question", "{}", "application/json");
    EXPECT_EQ(q->status, 502);
    EXPECT_EQ(parse(q)["error"]["detail"]["kind"], "backend");
    server.stop();
}

TEST_F(Gateway, RestartMidSessionReachesSameArtifact) {
    const auto script = t::training_script(kM);
    const std::size_t per_sample = kM + 2;

    t::TempDir other;
    gw::Engine straight(std::make_shared<store::Store>(other.path()), llm::script_mock(script), Config{});
    const std::string s0 = straight.create_session(session_body())["session_id"];
    for (std::size_t k = 0; k < 4; ++k) engine_sample(straight, s0, k);
    straight.finalize(s0, {{"name", "Inbox triage"}});

    std::string sid;
    {
        auto first = engine({script.begin(), script.begin() + 2 * per_sample + 1});
        sid = (*first).create_session(session_body())["session_id"];
        engine_sample(*first, sid, 0);
        engine_sample(*first, sid, 1);
        first->question(sid);  // a pending question survives the restart
        first->flush();
    }
    auto second = engine({script.begin() + 2 * per_sample + 1, script.end()});
    second->answer(sid, {{"answer", t::answer_text(2, 0)}});
    second->question(sid);
    second->answer(sid, {{"answer", t::answer_text(2, 1)}});
    second->label(sid, {{"class", "Important"}, {"explanation", "Because of sample 3"}});
    engine_sample(*second, sid, 3);
    second->finalize(sid, {{"name", "Inbox triage"}});

    EXPECT_EQ(second->store().payload(store::Kind::artifact, "inbox-triage"),
              straight.store().payload(store::Kind::artifact, "inbox-triage"));
}

TEST_F(Gateway, CliTrainMatchesHttpArtifact) {
    const auto script = write("script.jsonl", script_jsonl(t::training_script(kM)));
    const auto spec = write("spec.json", json(t::email_spec()).dump(2));
    const auto data = write("data.jsonl", samples_jsonl());
    const auto config = write("config.json", json{{"questions_per_sample", kM}}.dump());
    const std::string store_dir = (dir / "cli-store").string();

    const auto res = cli({"--store", store_dir, "--backend", "mock:" + script, "--config", config, "train", "--spec",
                          spec, "--data", data, "--name", "Inbox triage"},
                         typed_session());
    ASSERT_EQ(res.code, 0) << res.err << res.out;
    EXPECT_NE(res.out.find("Saved classifier inbox-triage"), std::string::npos);
    EXPECT_NE(res.out.find("Prediction: Important"), std::string::npos);

    auto eng = engine(t::training_script(kM));
    const std::string sid = eng->create_session(session_body())["session_id"];
    for (std::size_t k = 0; k < 4; ++k) engine_sample(*eng, sid, k);
    eng->finalize(sid, {{"name", "Inbox triage"}});

    store::Store cli_store(store_dir);
    EXPECT_EQ(cli_store.payload(store::Kind::artifact, "inbox-triage"),
              eng->store().payload(store::Kind::artifact, "inbox-triage"));
}

TEST_F(Gateway, CliTrainRepromptsOnUnknownLabel) {
    const auto script = write("script.jsonl", script_jsonl(t::training_script(1)));
    const auto spec = write("spec.json", json(t::email_spec()).dump());
    const auto data = write("data.jsonl", samples_jsonl());
    std::string in;
    for (std::size_t k = 0; k < 4; ++k) {
        in += t::answer_text(k, 0) + "\n";
        if (k == 0) in += "Spam\n\n";
        in += t::four_labels()[k] + "\n\n";
    }
    const auto config = write("config.json", "{\"questions_per_sample\": 1}");
    const auto res = cli({"--store", (dir / "s").string(), "--backend", "mock:" + script, "--config", config, "train",
                          "--spec", spec, "--data", data, "--name", "x"},
                         in);
    ASSERT_EQ(res.code, 0) << res.err;
    EXPECT_NE(res.out.find("Spam"), std::string::npos);

    const auto cut = cli({"--store", (dir / "s2").string(), "--backend", "mock:" + script, "--config", config, "train",
                          "--spec", spec, "--data", data, "--name", "y"},
                         t::answer_text(0, 0) + "\n");
    EXPECT_EQ(cut.code, 1);
}

TEST_F(Gateway, CliExitCodes) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    const auto bad = cli({"--config", t::fixture("bad.toml"), "--backend", "mock:" + write("e.jsonl", ""), "classify",
                          "--artifact", "x"});
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.err.find("config"), std::string::npos);
    EXPECT_EQ(cli({"--backend", "carrier-pigeon", "classify", "--artifact", "x"}).code, 2);
    const auto missing = cli({"--store", (dir / "s").string(), "--backend", "mock:" + write("e.jsonl", ""),
                              "classify", "--artifact", "nope"},
                             "hello");
    EXPECT_EQ(missing.code, 1);
    EXPECT_NE(missing.err.find("not_found"), std::string::npos);
}

TEST_F(Gateway, CliClassifyExportImportEvaluate) {
    auto script = t::training_script(kM);
    auto eng = engine(script);
    const std::string sid = eng->create_session(session_body())["session_id"];
    for (std::size_t k = 0; k < 4; ++k) engine_sample(*eng, sid, k);
    eng->finalize(sid, {{"name", "Inbox triage"}});
    const std::string store_dir = (dir / "store").string();

    const auto predict = write("predict.jsonl", script_jsonl({t::entry(llm::PurposeTag::predict,
                                                                       t::predict_reply("Unimportant", "A digest"))}));
    const auto res = cli({"--store", store_dir, "--backend", "mock:" + predict, "classify", "--artifact",
                          "inbox-triage"},
                         "Your weekly digest is here");
    ASSERT_EQ(res.code, 0) << res.err;
    EXPECT_EQ(res.out, "Unimportant\nA digest\n");

    const auto exported = cli({"--store", store_dir, "export", "--artifact", "inbox-triage"});
    ASSERT_EQ(exported.code, 0) << exported.err;
    const std::string fresh = (dir / "fresh").string();
    ASSERT_EQ(cli({"--store", fresh, "import"}, exported.out).code, 0);
    EXPECT_EQ(cli({"--store", fresh, "import"}, exported.out).code, 1);
    EXPECT_EQ(store::Store(fresh).payload(store::Kind::artifact, "inbox-triage"),
              eng->store().payload(store::Kind::artifact, "inbox-triage"));

    std::vector<llm::ScriptEntry> eval_script;
    std::string split;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto s = t::four_samples()[k];
        split += json{{"id", s.id}, {"text", s.text}, {"label", t::four_labels()[k]}}.dump() + "\n";
        eval_script.push_back(
            t::entry(llm::PurposeTag::predict, t::predict_reply(k == 2 ? "Unimportant" : t::four_labels()[k]), s.text));
    }
    const auto out = (dir / "report.jsonl").string();
    const auto ev = cli({"--store", store_dir, "--backend", "mock:" + write("eval.jsonl", script_jsonl(eval_script)),
                         "evaluate", "--method", "byoc", "--artifact", "inbox-triage", "--split",
                         write("split.jsonl", split), "--out", out});
    ASSERT_EQ(ev.code, 0) << ev.err;

    const auto golden_path = t::fixture("golden/cli_evaluate.txt");
    if (std::getenv("BYOC_UPDATE_GOLDEN")) t::write_file(golden_path, ev.out);
    EXPECT_EQ(ev.out, t::read_file(golden_path));

    const auto cmp = cli({"compare", out});
    ASSERT_EQ(cmp.code, 0) << cmp.err;
    EXPECT_EQ(cmp.out, ev.out);
    EXPECT_EQ(cli({"--store", store_dir, "--backend", "mock:" + write("e.jsonl", ""), "evaluate", "--method",
                   "sideways", "--split", write("split.jsonl", split)})
                  .code,
              2);
}

TEST(ErrorMapping, CodesAndStatuses) {
    using gw::ApiCode;
    EXPECT_EQ(gw::api_code(ErrorCode::conflict), ApiCode::state);
    EXPECT_EQ(gw::api_code(ErrorCode::classification), ApiCode::parse);
    EXPECT_EQ(gw::api_code(ErrorCode::io), ApiCode::backend);
    EXPECT_EQ(gw::api_code(ErrorCode::migration), ApiCode::validation);
    EXPECT_EQ(gw::http_status(ApiCode::validation), 400);
    EXPECT_EQ(gw::http_status(ApiCode::state), 409);
    EXPECT_EQ(gw::http_status(ApiCode::parse), 422);
    EXPECT_EQ(gw::http_status(ApiCode::backend), 502);
    EXPECT_EQ(gw::http_status(ApiCode::not_found), 404);
    const auto body = gw::error_body(Error(ErrorCode::conflict, "taken", {{"id", "x"}}));
    EXPECT_EQ(body["error"]["code"], "state");
    EXPECT_EQ(body["error"]["detail"]["id"], "x");
    EXPECT_EQ(body["error"]["detail"]["kind"], "conflict");
}
