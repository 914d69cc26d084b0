#include "byoc/classifier.hpp"

#include <functional>
#include <set>

#include "ask.hpp"
#include "byoc/error.hpp"
#include "byoc/summarizer.hpp"

namespace byoc::classifier {

const char* to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::zero_shot: return "zero_shot";
        case BaselineKind::zero_shot_summary: return "zero_shot_summary";
        case BaselineKind::few_shot: return "few_shot";
        case BaselineKind::few_shot_explanation: return "few_shot_explanation";
        case BaselineKind::few_shot_qa: return "few_shot_qa";
        case BaselineKind::byoc: return "byoc";
    }
    return "byoc";
}

std::optional<BaselineKind> parse_baseline_kind(std::string_view s) {
    for (auto k : kAllKinds) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

namespace {

bool uses_demos(BaselineKind k) {
    return k == BaselineKind::few_shot || k == BaselineKind::few_shot_explanation || k == BaselineKind::few_shot_qa;
}

constexpr std::string_view kDemoHeader = "Here are some examples of texts that the user has already classified:\n\n";

promptkit::PromptBundle render_baseline(const promptkit::ClassifierSpec& spec, const std::string& demo_block,
                                        std::string_view x, const Config& config) {
    promptkit::RenderContext ctx;
    ctx.spec = &spec;
    ctx.text = std::string(x);
    ctx.extra["demonstrations"] = demo_block;
    auto b = promptkit::render(llm::PurposeTag::baseline, ctx);
    b.temperature = config.classify_temperature;
    b.max_output_tokens = config.max_output_tokens;
    return b;
}

std::size_t prompt_tokens(const promptkit::PromptBundle& b, const textbudget::TokenCounter& counter) {
    return counter.count(b.request().concatenated_content());
}

// Largest token allowance for x such that the word-truncated x still fits.
std::size_t room_for_text(std::string_view x, const textbudget::TokenCounter& counter,
                          const std::function<bool(std::string_view)>& fits) {
    std::size_t lo = 0, hi = counter.count(x);
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        const std::string cut = textbudget::truncate_to_budget(x, mid, counter);
        if (!cut.empty() && fits(cut)) lo = mid; else hi = mid - 1;
    }
    return lo;
}

}  // namespace

std::string render_demo(BaselineKind kind, const Demo& demo) {
    std::string out = "--- Start of example ---\n" + demo.text + "\n--- End of example ---\n";
    if (kind == BaselineKind::few_shot_qa && !demo.qa.empty()) {
        out += "Questions and answers about this example:\n" + promptkit::render_qa(demo.qa) + "\n";
    }
    out += "Class: " + demo.label;
    if ((kind == BaselineKind::few_shot_explanation || kind == BaselineKind::few_shot_qa) && !demo.explanation.empty()) {
        out += "\nExplanation: " + demo.explanation;
    }
    return out;
}

promptkit::PromptBundle build_predict_prompt(const promptkit::ClassifierSpec& spec, std::string_view x,
                                             const Config& config) {
    if (x.empty()) throw Error(ErrorCode::validation, "cannot classify empty text");
    promptkit::RenderContext ctx;
    ctx.spec = &spec;
    ctx.text = std::string(x);
    auto b = promptkit::render(llm::PurposeTag::predict, ctx);
    b.temperature = config.classify_temperature;
    b.max_output_tokens = config.max_output_tokens;
    return b;
}

PredictionOutcome run_prompt(const promptkit::PromptBundle& bundle, const promptkit::ClassifierSpec& spec,
                             llm::Backend& backend, llm::Transcript& transcript) {
    const auto reply = detail::ask_structured(bundle, backend, transcript);
    const std::string& raw_class = reply.fields.at("Class");
    const auto cls = promptkit::match_class(raw_class, spec);
    if (!cls) {
        throw Error(ErrorCode::classification, "model answered '" + raw_class + "', which names no class",
                    {{"raw_class", raw_class},
                     {"prompt_tokens", std::to_string(reply.prompt_tokens)},
                     {"output_tokens", std::to_string(reply.output_tokens)}});
    }
    PredictionOutcome o;
    o.class_name = *cls;
    o.thoughts = reply.fields.at("Thoughts");
    o.reflection = reply.fields.at("Reflection");
    o.prompt_tokens = reply.prompt_tokens;
    o.output_tokens = reply.output_tokens;
    o.calls = reply.calls;
    return o;
}

namespace {

std::string maybe_summarize(std::string_view x, const promptkit::ClassifierSpec& spec, const Config& config,
                            llm::Backend* backend, llm::Transcript* transcript, PredictionOutcome* usage) {
    const auto counter = config.counter();
    if (counter.count(x) <= static_cast<std::size_t>(config.threshold())) return std::string(x);
    if (!backend || !transcript) {
        throw Error(ErrorCode::validation, "input exceeds the summarize threshold and no backend is available");
    }
    const std::size_t before = transcript->size();
    auto s = summarizer::summarize(x, spec, summarizer::SummarizeOptions::from(config), *backend, *transcript);
    if (usage) {
        for (std::size_t i = before; i < transcript->size(); ++i) {
            usage->prompt_tokens += transcript->entries()[i].completion.prompt_tokens;
            usage->output_tokens += transcript->entries()[i].completion.output_tokens;
            ++usage->calls;
        }
    }
    return s;
}

void add_usage(PredictionOutcome& into, const PredictionOutcome& from) {
    into.prompt_tokens += from.prompt_tokens;
    into.output_tokens += from.output_tokens;
    into.calls += from.calls;
}

}  // namespace

PredictionOutcome predict(const ClassifierArtifact& artifact, std::string_view x, llm::Backend& backend,
                          llm::Transcript& transcript) {
    if (x.empty()) throw Error(ErrorCode::validation, "cannot classify empty text");
    PredictionOutcome summary_usage;
    const std::string input = maybe_summarize(x, artifact.spec, artifact.config, &backend, &transcript, &summary_usage);
    auto outcome = run_prompt(build_predict_prompt(artifact.spec, input, artifact.config), artifact.spec, backend,
                              transcript);
    add_usage(outcome, summary_usage);
    return outcome;
}

BaselinePrompt build_baseline_prompt(BaselineKind kind, const promptkit::ClassifierSpec& spec,
                                     const std::vector<Demo>& demos, std::string_view x,
                                     const BaselineInputs& inputs) {
    if (x.empty()) throw Error(ErrorCode::validation, "cannot classify empty text");
    spec.validate();
    const auto counter = inputs.config.counter();
    const std::size_t budget = inputs.budget;
    BaselinePrompt out;

    if (kind == BaselineKind::byoc) {
        const std::string input =
            maybe_summarize(x, spec, inputs.config, inputs.backend, inputs.transcript, nullptr);
        out.summarized = input != x;
        out.bundle = build_predict_prompt(spec, input, inputs.config);
        if (prompt_tokens(out.bundle, counter) > budget) {
            throw Error(ErrorCode::validation, "prompt budget too small for the input",
                        {{"budget", std::to_string(budget)}});
        }
        return out;
    }

    auto fits_with = [&](const std::string& block) {
        return [&, block](std::string_view text) {
            return prompt_tokens(render_baseline(spec, block, text, inputs.config), counter) <= budget;
        };
    };
    const auto fits_alone = fits_with("");

    if (kind == BaselineKind::zero_shot || kind == BaselineKind::zero_shot_summary) {
        if (fits_alone(x)) {
            out.bundle = render_baseline(spec, "", x, inputs.config);
            return out;
        }
        const std::size_t room = room_for_text(x, counter, fits_alone);
        if (room == 0) {
            throw Error(ErrorCode::validation, "prompt budget too small for any of the input",
                        {{"budget", std::to_string(budget)}});
        }
        std::string text;
        if (kind == BaselineKind::zero_shot) {
            text = textbudget::truncate_to_budget(x, room, counter);
            out.truncated = true;
        } else {
            if (!inputs.backend || !inputs.transcript) {
                throw Error(ErrorCode::validation, "zero_shot_summary needs a backend to summarize long inputs");
            }
            if (room < 64) {
                throw Error(ErrorCode::validation, "prompt budget leaves under 64 tokens for the summary");
            }
            auto options = summarizer::SummarizeOptions::from(inputs.config);
            options.threshold = room;
            text = summarizer::summarize(x, spec, options, *inputs.backend, *inputs.transcript);
            out.summarized = true;
            if (!fits_alone(text)) {
                text = textbudget::truncate_to_budget(text, room_for_text(text, counter, fits_alone), counter);
                out.truncated = true;
            }
        }
        out.bundle = render_baseline(spec, "", text, inputs.config);
        return out;
    }

    if (!uses_demos(kind)) throw Error(ErrorCode::validation, "unsupported baseline kind");
    const std::string input = maybe_summarize(x, spec, inputs.config, inputs.backend, inputs.transcript, nullptr);
    out.summarized = input != x;
    if (!fits_alone(input)) {
        throw Error(ErrorCode::validation, "prompt budget too small for the input",
                    {{"budget", std::to_string(budget)}});
    }
    std::string body;
    for (const auto& demo : demos) {
        const std::string candidate = body + (body.empty() ? "" : "\n\n") + render_demo(kind, demo);
        const std::string block = std::string(kDemoHeader) + candidate + "\n\n";
        if (!fits_with(block)(input)) break;
        body = candidate;
        ++out.demos_included;
    }
    const std::string block = body.empty() ? std::string() : std::string(kDemoHeader) + body + "\n\n";
    out.bundle = render_baseline(spec, block, input, inputs.config);
    return out;
}

PredictionOutcome predict_hierarchical(const ClassifierArtifact& parent,
                                       const std::map<std::string, ClassifierArtifact>& children,
                                       std::string_view x, llm::Backend& backend, llm::Transcript& transcript) {
    std::set<std::string> child_classes;
    for (const auto& c : parent.spec.classes) {
        const auto it = children.find(c.name);
        if (it == children.end()) {
            throw Error(ErrorCode::validation, "no child classifier for parent class " + c.name, {{"class", c.name}});
        }
        for (const auto& sub : it->second.spec.classes) {
            if (!child_classes.insert(sub.name).second) {
                throw Error(ErrorCode::validation, "child class " + sub.name + " appears under two parents",
                            {{"class", sub.name}});
            }
        }
    }
    const auto routed = predict(parent, x, backend, transcript);
    auto outcome = predict(children.at(routed.class_name), x, backend, transcript);
    add_usage(outcome, routed);
    return outcome;
}

}  // namespace byoc::classifier
