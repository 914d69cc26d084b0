#include "ask.hpp"

#include "byoc/error.hpp"

namespace byoc::detail {

StructuredReply ask_structured(const promptkit::PromptBundle& bundle, llm::Backend& backend,
                               llm::Transcript& transcript) {
    StructuredReply out;
    llm::CompletionRequest request = bundle.request();
    auto first = llm::complete(backend, request, transcript);
    out.prompt_tokens += first.prompt_tokens;
    out.output_tokens += first.output_tokens;
    out.calls = 1;
    try {
        out.fields = promptkit::parse(bundle.purpose, first.text);
        out.raw = std::move(first.text);
        return out;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::parse) throw;
        std::string missing;
        if (auto it = e.detail().find("missing"); it != e.detail().end()) {
            for (char ch : it->second) missing += ch == ',' ? std::string(", ") : std::string(1, ch);
        }
        std::string format;
        for (const auto& label : bundle.schema) format += "\n" + label + ": <" + label + ">";
        request.messages.push_back({llm::Role::assistant, first.text.empty() ? std::string("(empty)") : first.text});
        request.messages.push_back(
            {llm::Role::user, "Your response was missing the following fields: " + missing +
                                  ". Respond again using exactly this format:\n" + format});
    }
    auto second = llm::complete(backend, request, transcript);
    out.prompt_tokens += second.prompt_tokens;
    out.output_tokens += second.output_tokens;
    out.calls = 2;
    out.fields = promptkit::parse(bundle.purpose, second.text);
    out.raw = std::move(second.text);
    return out;
}

}  // namespace byoc::detail
