#pragma once

#include <cstdint>

#include "byoc/llm.hpp"
#include "byoc/promptkit.hpp"

namespace byoc::detail {

struct StructuredReply {
    promptkit::FieldMap fields;
    std::string raw;
    std::int64_t prompt_tokens = 0;
    std::int64_t output_tokens = 0;
    std::size_t calls = 0;
};

/// Sends the prompt and parses it against its schema. A malformed reply
/// gets one re-ask naming the missing fields; a second failure throws parse.
StructuredReply ask_structured(const promptkit::PromptBundle& bundle, llm::Backend& backend,
                               llm::Transcript& transcript);

}  // namespace byoc::detail
