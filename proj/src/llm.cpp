#include "byoc/llm.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "byoc/error.hpp"
#include "byoc/serialize.hpp"
#include "digest.hpp"

namespace byoc::detail {

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::io, "sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

}  // namespace byoc::detail

namespace byoc::llm {

using nlohmann::json;

const char* to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

std::optional<Role> parse_role(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    return std::nullopt;
}

const char* to_string(PurposeTag tag) {
    switch (tag) {
        case PurposeTag::gen_question: return "gen_question";
        case PurposeTag::interactive_predict: return "interactive_predict";
        case PurposeTag::update: return "update";
        case PurposeTag::predict: return "predict";
        case PurposeTag::summarize_chunk: return "summarize_chunk";
        case PurposeTag::baseline: return "baseline";
    }
    return "predict";
}

std::optional<PurposeTag> parse_purpose(std::string_view s) {
    for (auto tag : {PurposeTag::gen_question, PurposeTag::interactive_predict, PurposeTag::update,
                     PurposeTag::predict, PurposeTag::summarize_chunk, PurposeTag::baseline}) {
        if (s == to_string(tag)) return tag;
    }
    return std::nullopt;
}

double default_temperature(PurposeTag tag) { return tag == PurposeTag::gen_question ? 0.3 : 0.0; }

void CompletionRequest::validate() const {
    if (messages.empty()) throw Error(ErrorCode::validation, "request has no messages");
    if (messages.front().role != Role::system) {
        throw Error(ErrorCode::validation, "first message must have role system");
    }
    for (const auto& m : messages) {
        if (m.content.empty()) throw Error(ErrorCode::validation, "message content must be non-empty");
    }
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw Error(ErrorCode::validation, "temperature " + std::to_string(temperature) + " outside [0, 2]",
                    {{"temperature", std::to_string(temperature)}});
    }
    if (max_output_tokens < 1) throw Error(ErrorCode::validation, "max_output_tokens must be >= 1");
}

std::string CompletionRequest::concatenated_content() const {
    std::string out;
    for (const auto& m : messages) out += m.content;
    return out;
}

std::string CompletionRequest::digest() const {
    json j = *this;
    return detail::sha256_hex(j.dump());
}

Transcript::Transcript()
    : clock_([] {
          return std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::system_clock::now().time_since_epoch())
              .count();
      }) {}

Transcript::Transcript(Clock clock) : clock_(std::move(clock)) {}

void Transcript::append(CompletionRequest request, Completion completion) {
    entries_.push_back({std::move(request), std::move(completion), clock_ ? clock_() : 0});
}

void Transcript::append_recorded(TranscriptEntry entry) { entries_.push_back(std::move(entry)); }

void Transcript::extend(const Transcript& other) {
    entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

std::size_t Transcript::count(PurposeTag tag) const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.request.purpose == tag;
    return n;
}

std::int64_t Transcript::prompt_tokens() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.completion.prompt_tokens;
    return n;
}

std::int64_t Transcript::output_tokens() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.completion.output_tokens;
    return n;
}

std::string Transcript::digest() const {
    std::string buf;
    for (const auto& e : entries_) {
        buf += e.request.digest();
        buf += '\n';
        buf += json{{"text", e.completion.text},
                    {"prompt_tokens", e.completion.prompt_tokens},
                    {"output_tokens", e.completion.output_tokens}}
                   .dump();
        buf += '\n';
    }
    return detail::sha256_hex(buf);
}

std::string Transcript::to_jsonl() const {
    std::string out;
    for (const auto& e : entries_) {
        json j;
        j["purpose"] = to_string(e.request.purpose);
        j["request_digest"] = e.request.digest();
        j["request"] = e.request;
        j["reply"] = e.completion.text;
        j["prompt_tokens"] = e.completion.prompt_tokens;
        j["output_tokens"] = e.completion.output_tokens;
        j["timestamp_ms"] = e.timestamp_ms;
        out += j.dump();
        out += '\n';
    }
    return out;
}

Transcript Transcript::from_jsonl(std::string_view jsonl) {
    Transcript t;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            TranscriptEntry e;
            e.request = j.at("request").get<CompletionRequest>();
            e.completion.text = j.at("reply").get<std::string>();
            e.completion.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
            e.completion.output_tokens = j.at("output_tokens").get<std::int64_t>();
            e.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
            t.append_recorded(std::move(e));
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::validation, "transcript line " + std::to_string(n) + ": " + ex.what());
        }
    }
    return t;
}

Completion complete(Backend& backend, const CompletionRequest& request, Transcript& transcript) {
    request.validate();
    Completion c = backend.complete(request);
    transcript.append(request, c);
    return c;
}

bool Matcher::matches(const CompletionRequest& request) const {
    if (purpose && *purpose != request.purpose) return false;
    if (contains && request.concatenated_content().find(*contains) == std::string::npos) return false;
    if (request_digest && *request_digest != request.digest()) return false;
    return true;
}

MockBackend::MockBackend(std::vector<ScriptEntry> script, textbudget::TokenCounter counter)
    : script_(std::move(script)), consumed_(script_.size(), false), counter_(std::move(counter)) {}

Completion MockBackend::complete(const CompletionRequest& request) {
    std::lock_guard lock(mu_);
    ++calls_;
    const char* purpose = to_string(request.purpose);
    bool any_left = false;
    for (std::size_t i = 0; i < script_.size(); ++i) {
        if (consumed_[i]) continue;
        any_left = true;
        if (!script_[i].matcher.matches(request)) continue;
        consumed_[i] = true;
        Completion c;
        c.text = script_[i].reply;
        c.prompt_tokens = static_cast<std::int64_t>(counter_.count(request.concatenated_content()));
        c.output_tokens = static_cast<std::int64_t>(counter_.count(c.text));
        return c;
    }
    if (!any_left) {
        throw Error(ErrorCode::backend, std::string("mock script exhausted at a ") + purpose + " call",
                    {{"kind", "script_underrun"}, {"purpose", purpose}});
    }
    throw Error(ErrorCode::backend, std::string("no scripted reply matches a ") + purpose + " call",
                {{"kind", "script_mismatch"}, {"purpose", purpose}});
}

std::size_t MockBackend::remaining() const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (bool c : consumed_) n += !c;
    return n;
}

std::size_t MockBackend::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::shared_ptr<MockBackend> script_mock(std::vector<ScriptEntry> replies, textbudget::TokenCounter counter) {
    return std::make_shared<MockBackend>(std::move(replies), std::move(counter));
}

std::vector<ScriptEntry> parse_script(std::string_view jsonl) {
    std::vector<ScriptEntry> script;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            ScriptEntry e;
            e.reply = j.at("reply").get<std::string>();
            if (j.contains("purpose")) {
                const auto tag = parse_purpose(j["purpose"].get<std::string>());
                if (!tag) throw Error(ErrorCode::validation, "unknown purpose " + j["purpose"].dump());
                e.matcher.purpose = tag;
            }
            if (j.contains("contains")) e.matcher.contains = j["contains"].get<std::string>();
            if (j.contains("request_digest")) e.matcher.request_digest = j["request_digest"].get<std::string>();
            script.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::validation, "script line " + std::to_string(n) + ": " + ex.what(),
                        {{"line", std::to_string(n)}});
        }
    }
    return script;
}

std::vector<ScriptEntry> load_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::config, "cannot open mock script " + path, {{"path", path}});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_script(buf.str());
}

std::vector<ScriptEntry> script_from_transcript(const Transcript& t) {
    std::vector<ScriptEntry> script;
    script.reserve(t.size());
    for (const auto& e : t.entries()) {
        ScriptEntry s;
        s.matcher.request_digest = e.request.digest();
        s.reply = e.completion.text;
        script.push_back(std::move(s));
    }
    return script;
}

FunctionBackend::FunctionBackend(Responder responder, textbudget::TokenCounter counter)
    : responder_(std::move(responder)), counter_(std::move(counter)) {}

Completion FunctionBackend::complete(const CompletionRequest& request) {
    {
        std::lock_guard lock(mu_);
        ++calls_;
    }
    Completion c;
    c.text = responder_(request);
    c.prompt_tokens = static_cast<std::int64_t>(counter_.count(request.concatenated_content()));
    c.output_tokens = static_cast<std::int64_t>(counter_.count(c.text));
    return c;
}

std::size_t FunctionBackend::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

}  // namespace byoc::llm
