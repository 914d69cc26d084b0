#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "byoc/textbudget.hpp"

namespace byoc::llm {

enum class Role { system, user, assistant };
const char* to_string(Role role);
std::optional<Role> parse_role(std::string_view s);

enum class PurposeTag { gen_question, interactive_predict, update, predict, summarize_chunk, baseline };
const char* to_string(PurposeTag tag);
std::optional<PurposeTag> parse_purpose(std::string_view s);

/// Temperature used for a purpose unless the caller overrides it.
double default_temperature(PurposeTag tag);

inline constexpr int kDefaultMaxOutputTokens = 512;

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_output_tokens = kDefaultMaxOutputTokens;
    PurposeTag purpose = PurposeTag::predict;

    /// Throws validation on empty messages, empty content, a first message
    /// that is not `system`, temperature outside [0, 2] or max_output_tokens < 1.
    void validate() const;

    /// Message contents joined with no separator; the unit the mock bills.
    std::string concatenated_content() const;

    /// SHA-256 over a canonical serialization (purpose, temperature, limit, messages).
    std::string digest() const;

    bool operator==(const CompletionRequest&) const = default;
};

struct Completion {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t output_tokens = 0;

    bool operator==(const Completion&) const = default;
};

struct TranscriptEntry {
    CompletionRequest request;
    Completion completion;
    std::int64_t timestamp_ms = 0;
};

/// Append-only record of every call a session or evaluation run makes.
class Transcript {
public:
    using Clock = std::function<std::int64_t()>;

    Transcript();
    explicit Transcript(Clock clock);

    void append(CompletionRequest request, Completion completion);
    /// For restoring persisted transcripts; keeps the recorded timestamp.
    void append_recorded(TranscriptEntry entry);
    /// Appends every entry of `other` in order.
    void extend(const Transcript& other);

    const std::vector<TranscriptEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t count(PurposeTag tag) const;

    std::int64_t prompt_tokens() const;
    std::int64_t output_tokens() const;
    std::int64_t total_tokens() const { return prompt_tokens() + output_tokens(); }

    /// Content digest over request digests and completions; timestamps excluded.
    std::string digest() const;

    /// One JSON object per line: purpose, request digest, full request, reply,
    /// token counts, timestamp.
    std::string to_jsonl() const;
    static Transcript from_jsonl(std::string_view jsonl);

private:
    Clock clock_;
    std::vector<TranscriptEntry> entries_;
};

/// A text-completion backend. Implementations must be safe for concurrent calls.
class Backend {
public:
    virtual ~Backend() = default;
    virtual Completion complete(const CompletionRequest& request) = 0;
};

/// Validates the request, calls the backend and appends to the transcript.
Completion complete(Backend& backend, const CompletionRequest& request, Transcript& transcript);

/// A scripted entry matches when every populated predicate holds.
struct Matcher {
    std::optional<PurposeTag> purpose;
    std::optional<std::string> contains;        // substring of the concatenated content
    std::optional<std::string> request_digest;  // exact request identity (transcript replay)

    bool matches(const CompletionRequest& request) const;
};

struct ScriptEntry {
    Matcher matcher;
    std::string reply;
};

/// Deterministic scripted backend. Each call consumes the first unconsumed
/// matching entry; token counts come from the attached counter.
class MockBackend : public Backend {
public:
    explicit MockBackend(std::vector<ScriptEntry> script, textbudget::TokenCounter counter = {});

    Completion complete(const CompletionRequest& request) override;

    std::size_t remaining() const;
    std::size_t calls() const;

private:
    mutable std::mutex mu_;
    std::vector<ScriptEntry> script_;
    std::vector<bool> consumed_;
    std::size_t calls_ = 0;
    textbudget::TokenCounter counter_;
};

std::shared_ptr<MockBackend> script_mock(std::vector<ScriptEntry> replies,
                                         textbudget::TokenCounter counter = {});

/// Script file: one JSON object per line with `reply` and optional `purpose`,
/// `contains`, `request_digest` matchers.
std::vector<ScriptEntry> parse_script(std::string_view jsonl);
std::vector<ScriptEntry> load_script(const std::string& path);

/// Script that reproduces every completion of `t`, matched by request digest.
std::vector<ScriptEntry> script_from_transcript(const Transcript& t);

/// Backend computing replies with a callback; billed like the mock.
class FunctionBackend : public Backend {
public:
    using Responder = std::function<std::string(const CompletionRequest&)>;
    explicit FunctionBackend(Responder responder, textbudget::TokenCounter counter = {});
    Completion complete(const CompletionRequest& request) override;
    std::size_t calls() const;

private:
    Responder responder_;
    textbudget::TokenCounter counter_;
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
};

struct LiveConfig {
    std::string endpoint;  // e.g. http://localhost:8000/v1/chat/completions
    std::string model;
    std::string api_key;
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{120};

    /// Reads BYOC_API_KEY / BYOC_ENDPOINT / BYOC_MODEL for unset fields.
    static LiveConfig from_env(LiveConfig base);
    static LiveConfig from_env();
};

/// Chat-completions HTTP backend. Retries transport failures, 429 and 5xx
/// with exponential backoff.
class LiveBackend : public Backend {
public:
    /// Throws config when the endpoint or credential is missing.
    explicit LiveBackend(LiveConfig config, textbudget::TokenCounter counter = {});
    Completion complete(const CompletionRequest& request) override;

    const LiveConfig& config() const noexcept { return config_; }

    /// Request body in the chat-completions shape.
    static std::string request_body(const CompletionRequest& request, const std::string& model);

private:
    LiveConfig config_;
    textbudget::TokenCounter counter_;
};

/// Parses a chat-completions response body. Falls back to the counter when
/// there is no usage block.
Completion parse_completion_body(std::string_view body, const CompletionRequest& request,
                                 const textbudget::TokenCounter& counter);

}  // namespace byoc::llm
