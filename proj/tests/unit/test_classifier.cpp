#include <gtest/gtest.h>

#include "byoc/classifier.hpp"
#include "byoc/error.hpp"
#include "support.hpp"

using namespace byoc;
using namespace byoc::classifier;
using llm::PurposeTag;
namespace t = byoc::testing;

namespace {

ClassifierArtifact artifact_for(const promptkit::ClassifierSpec& spec, Config cfg = {}) {
    ClassifierArtifact a;
    a.name = "test";
    a.spec = spec;
    a.config = cfg;
    return a;
}

std::vector<Demo> demos(std::size_t n) {
    std::vector<Demo> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({"Demo email " + std::to_string(i) + ": " + t::words(20 + i * 3, "d"),
                       i % 2 ? "Unimportant" : "Important", "Explanation " + std::to_string(i) + " " + t::words(8, "e"),
                       {{"Question " + std::to_string(i) + "?", "Answer " + t::words(6, "a"), ""},
                        {"Follow-up?", "Yes.", ""}}});
    }
    return out;
}

}  // namespace

TEST(Demo, RenderingPerKind) {
    const Demo d{"text body", "Important", "because", {{"q?", "a.", ""}}};
    EXPECT_EQ(render_demo(BaselineKind::few_shot, d),
              "--- Start of example ---\ntext body\n--- End of example ---\nClass: Important");
    EXPECT_EQ(render_demo(BaselineKind::few_shot_explanation, d),
              "--- Start of example ---\ntext body\n--- End of example ---\nClass: Important\nExplanation: because");
    EXPECT_EQ(render_demo(BaselineKind::few_shot_qa, d),
              "--- Start of example ---\ntext body\n--- End of example ---\n"
              "Questions and answers about this example:\nq?\na.\nClass: Important\nExplanation: because");
}

TEST(Kinds, LadderOrderAndNames) {
    std::vector<std::string> names;
    for (auto k : kAllKinds) {
        names.push_back(to_string(k));
        EXPECT_EQ(parse_baseline_kind(to_string(k)), k);
    }
    EXPECT_EQ(names, (std::vector<std::string>{"zero_shot", "zero_shot_summary", "few_shot", "few_shot_explanation",
                                               "few_shot_qa", "byoc"}));
    EXPECT_EQ(parse_baseline_kind("fine_tuned"), std::nullopt);
}

TEST(Predict, PromptHasDescriptionsButNoQuestions) {
    const auto b = build_predict_prompt(t::email_spec(), "hello there", Config{});
    EXPECT_EQ(b.purpose, PurposeTag::predict);
    EXPECT_NE(b.user().find("Important: Emails that need a reply from me this week"), std::string::npos);
    EXPECT_NE(b.user().find("hello there"), std::string::npos);
    EXPECT_EQ(b.user().find("questions and answers"), std::string::npos);
    EXPECT_EQ(b.schema, (std::vector<std::string>{"Thoughts", "Class", "Reflection"}));
}

TEST(Predict, MatchesClassAndReportsUsage) {
    llm::MockBackend mock({t::entry(PurposeTag::predict, t::predict_reply("unimportant", "Bulk mail"))});
    llm::Transcript tr;
    const auto o = predict(artifact_for(t::email_spec()), "Weekly digest", mock, tr);
    EXPECT_EQ(o.class_name, "Unimportant");
    EXPECT_EQ(o.reflection, "Bulk mail");
    EXPECT_EQ(o.calls, 1u);
    EXPECT_EQ(o.prompt_tokens, tr.prompt_tokens());
    EXPECT_EQ(o.output_tokens, tr.output_tokens());
}

TEST(Predict, NoMatchIsClassificationError) {
    llm::MockBackend mock({t::entry(PurposeTag::predict, t::predict_reply("Spam"))});
    llm::Transcript tr;
    try {
        predict(artifact_for(t::email_spec()), "x", mock, tr);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::classification);
        EXPECT_EQ(e.detail().at("raw_class"), "Spam");
    }
    EXPECT_EQ(tr.size(), 1u);
}

TEST(Predict, SummarizesLongInputFirst) {
    Config cfg;
    cfg.summarize_threshold = 64;
    cfg.chunk_tokens = 64;
    const std::string x = t::words(100);
    const auto chunks = textbudget::split_chunks(x, 64, cfg.counter());
    std::vector<llm::ScriptEntry> script;
    for (std::size_t i = 0; i < chunks.size(); ++i) script.push_back(t::entry(PurposeTag::summarize_chunk, "sum."));
    script.push_back(t::entry(PurposeTag::predict, t::predict_reply("Important"), "--- Start of text ---\nsum.\n"));
    llm::MockBackend mock(script);
    llm::Transcript tr;
    const auto o = predict(artifact_for(t::email_spec(), cfg), x, mock, tr);
    EXPECT_EQ(o.class_name, "Important");
    EXPECT_EQ(o.calls, chunks.size() + 1);
    EXPECT_EQ(o.prompt_tokens, tr.prompt_tokens());
}

TEST(Baseline, ZeroShotMatchesPredictPrompt) {
    BaselineInputs in;
    const auto spec = t::email_spec();
    const auto b = build_baseline_prompt(BaselineKind::zero_shot, spec, {}, "hello", in);
    const auto p = build_predict_prompt(spec, "hello", Config{});
    EXPECT_EQ(b.bundle.system(), p.system());
    EXPECT_EQ(b.bundle.user(), p.user());
    EXPECT_EQ(b.bundle.purpose, PurposeTag::baseline);
    EXPECT_FALSE(b.truncated);
}

TEST(Baseline, ZeroShotTruncatesToWholeWords) {
    const auto spec = t::email_spec();
    BaselineInputs in;
    const std::string x = t::words(2000);
    const auto empty_prompt = build_predict_prompt(spec, "w", Config{});
    const std::size_t fixed = in.config.counter().count(empty_prompt.request().concatenated_content());
    in.budget = fixed + 100;
    const auto b = build_baseline_prompt(BaselineKind::zero_shot, spec, {}, x, in);
    EXPECT_TRUE(b.truncated);
    EXPECT_LE(in.config.counter().count(b.bundle.request().concatenated_content()), in.budget);
    const auto start = b.bundle.user().find("--- Start of text ---\n") + 22;
    const auto end = b.bundle.user().find("\n--- End of text ---");
    const std::string kept = b.bundle.user().substr(start, end - start);
    EXPECT_EQ(x.rfind(kept, 0), 0u);
    EXPECT_EQ(x[kept.size()], ' ');
    // One more word would not fit.
    const std::string one_more = x.substr(0, x.find(' ', kept.size() + 1));
    EXPECT_GT(in.config.counter().count(build_predict_prompt(spec, one_more, Config{}).request().concatenated_content()),
              in.budget);
}

TEST(Baseline, PackingMatchesGreedyOracle) {
    const auto spec = t::email_spec();
    const auto ds = demos(12);
    const std::string x = "Can we move the review to Monday?";
    const textbudget::TokenCounter counter;
    const auto base = build_predict_prompt(spec, x, Config{});
    const std::string anchor = "Here is the current text that we are annotating:";
    const auto at = base.user().find(anchor);
    ASSERT_NE(at, std::string::npos);

    const std::size_t bare = counter.count(base.request().concatenated_content());
    for (auto kind : {BaselineKind::few_shot, BaselineKind::few_shot_explanation, BaselineKind::few_shot_qa}) {
        for (std::size_t extra : {0u, 40u, 150u, 400u, 900u, 4000u}) {
            const std::size_t budget = bare + extra;
            // Oracle: splice the k-demo block into the zero-shot prompt, keep the longest fitting prefix.
            std::size_t expected = 0;
            for (std::size_t k = 1; k <= ds.size(); ++k) {
                std::string block = "Here are some examples of texts that the user has already classified:\n\n";
                for (std::size_t i = 0; i < k; ++i) block += (i ? "\n\n" : "") + render_demo(kind, ds[i]);
                block += "\n\n";
                std::string user = base.user();
                user.insert(at, block);
                if (counter.count(base.system() + user) > budget) break;
                expected = k;
            }
            BaselineInputs in;
            in.budget = budget;
            const auto got = build_baseline_prompt(kind, spec, ds, x, in);
            EXPECT_EQ(got.demos_included, expected) << to_string(kind) << " budget " << budget;
            EXPECT_LE(counter.count(got.bundle.request().concatenated_content()), budget);
        }
    }
}

TEST(Baseline, InputThatCannotFitIsRejected) {
    BaselineInputs in;
    in.budget = 50;
    EXPECT_THROW(build_baseline_prompt(BaselineKind::few_shot, t::email_spec(), demos(2), "x", in), Error);
    EXPECT_THROW(build_baseline_prompt(BaselineKind::zero_shot, t::email_spec(), {}, "x", in), Error);
}

TEST(Baseline, ZeroShotSummaryFitsRoom) {
    const auto spec = t::email_spec();
    BaselineInputs in;
    const auto fixed = in.config.counter().count(build_predict_prompt(spec, "w", Config{}).request().concatenated_content());
    in.budget = fixed + 120;
    const std::string x = t::words(400);
    const auto chunks = textbudget::split_chunks(x, static_cast<std::size_t>(in.config.chunk_tokens), in.config.counter());
    std::vector<llm::ScriptEntry> script;
    for (std::size_t i = 0; i < chunks.size(); ++i) script.push_back(t::entry(PurposeTag::summarize_chunk, "Short."));
    llm::MockBackend mock(script);
    llm::Transcript tr;
    in.backend = &mock;
    in.transcript = &tr;
    const auto b = build_baseline_prompt(BaselineKind::zero_shot_summary, spec, {}, x, in);
    EXPECT_TRUE(b.summarized);
    EXPECT_NE(b.bundle.user().find("--- Start of text ---\nShort.\n"), std::string::npos);
    EXPECT_EQ(tr.count(PurposeTag::summarize_chunk), chunks.size());
}

TEST(Baseline, TokenOrderingOnSyntheticCorpus) {
    // Refined descriptions: longer than the user's initial ones, far shorter than ten demos.
    auto refined = t::email_spec();
    refined.classes[0].description += ". " + t::words(40, "imp");
    refined.classes[1].description += ". " + t::words(40, "unimp");
    const auto ds = demos(10);
    const textbudget::TokenCounter counter;
    BaselineInputs in;
    for (int i = 0; i < 10; ++i) {
        const std::string x = "Sample " + std::to_string(i) + ": " + t::words(60 + 7 * i, "s");
        auto tokens = [&](BaselineKind k) {
            const auto& spec = k == BaselineKind::byoc ? refined : t::email_spec();
            return counter.count(build_baseline_prompt(k, spec, ds, x, in).bundle.request().concatenated_content());
        };
        const auto zs = tokens(BaselineKind::zero_shot);
        const auto fs = tokens(BaselineKind::few_shot);
        const auto fse = tokens(BaselineKind::few_shot_explanation);
        const auto fsq = tokens(BaselineKind::few_shot_qa);
        const auto by = tokens(BaselineKind::byoc);
        EXPECT_LT(zs, fs);
        EXPECT_LE(fs, fse);
        EXPECT_LE(fse, fsq);
        EXPECT_LT(by, fs);
    }
}

namespace {

struct Taxonomy {
    std::map<std::string, std::vector<std::string>> children{
        {"Science", {"Physics", "Chemistry", "Biology", "Geology"}},
        {"Arts", {"Painting", "Music", "Poetry", "Dance"}},
        {"Sport", {"Tennis", "Rowing", "Chess"}}};
};

promptkit::ClassifierSpec spec_of(const std::vector<std::string>& names) {
    promptkit::ClassifierSpec s;
    s.purpose = "Route abstracts";
    for (const auto& n : names) s.classes.push_back({n, "Texts about " + n});
    return s;
}

// Replies with whichever listed class the text's topic belongs to.
std::string route(const llm::CompletionRequest& r, const Taxonomy& tax) {
    const std::string& user = r.messages[1].content;
    const auto a = user.find("--- Start of text ---\n") + 22;
    const std::string topic = user.substr(a, user.find("\n--- End of text ---") - a);
    const auto names_at = user.find("the classes that the user chose were: ") + 38;
    const std::string names = user.substr(names_at, user.find(" name.", names_at) - names_at);
    if (names.find(topic) != std::string::npos) return t::predict_reply(topic);
    for (const auto& [parent, kids] : tax.children) {
        if (std::find(kids.begin(), kids.end(), topic) != kids.end()) return t::predict_reply(parent);
    }
    return t::predict_reply("none");
}

}  // namespace

TEST(Hierarchical, EqualsFlatOracleWithTwoCallsEach) {
    const Taxonomy tax;
    std::vector<std::string> parents, leaves;
    std::map<std::string, ClassifierArtifact> kids;
    for (const auto& [p, ks] : tax.children) {
        parents.push_back(p);
        leaves.insert(leaves.end(), ks.begin(), ks.end());
        kids[p] = artifact_for(spec_of(ks));
    }
    ASSERT_EQ(leaves.size(), 11u);
    const auto parent = artifact_for(spec_of(parents));
    const auto flat = artifact_for(spec_of(leaves));

    for (const auto& leaf : leaves) {
        llm::FunctionBackend flat_backend([&](const llm::CompletionRequest& r) { return route(r, tax); });
        llm::FunctionBackend tree_backend([&](const llm::CompletionRequest& r) { return route(r, tax); });
        llm::Transcript ft, ht;
        const auto want = predict(flat, leaf, flat_backend, ft);
        const auto got = predict_hierarchical(parent, kids, leaf, tree_backend, ht);
        EXPECT_EQ(got.class_name, want.class_name);
        EXPECT_EQ(got.class_name, leaf);
        EXPECT_EQ(got.calls, 2u);
        EXPECT_EQ(ht.size(), 2u);
        EXPECT_EQ(got.prompt_tokens, ht.prompt_tokens());
    }
}

TEST(Hierarchical, ValidatesTree) {
    const auto parent = artifact_for(spec_of({"A", "B"}));
    std::map<std::string, ClassifierArtifact> kids{{"A", artifact_for(spec_of({"x", "y"}))}};
    llm::MockBackend mock({});
    llm::Transcript tr;
    EXPECT_THROW(predict_hierarchical(parent, kids, "t", mock, tr), Error);
    kids["B"] = artifact_for(spec_of({"y", "z"}));
    EXPECT_THROW(predict_hierarchical(parent, kids, "t", mock, tr), Error);
    EXPECT_EQ(mock.calls(), 0u);
}
