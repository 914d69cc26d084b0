#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "byoc/error.hpp"
#include "byoc/llm.hpp"

namespace byoc::llm {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::config, "endpoint must be an absolute URL: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string env_or(const char* name, const std::string& fallback) {
    if (!fallback.empty()) return fallback;
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

bool transient(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

LiveConfig LiveConfig::from_env() { return from_env(LiveConfig{}); }

LiveConfig LiveConfig::from_env(LiveConfig base) {
    base.api_key = env_or("BYOC_API_KEY", base.api_key);
    base.endpoint = env_or("BYOC_ENDPOINT", base.endpoint);
    base.model = env_or("BYOC_MODEL", base.model);
    return base;
}

LiveBackend::LiveBackend(LiveConfig config, textbudget::TokenCounter counter)
    : config_(std::move(config)), counter_(std::move(counter)) {
    if (config_.endpoint.empty()) throw Error(ErrorCode::config, "live backend: endpoint not configured");
    if (config_.api_key.empty()) {
        throw Error(ErrorCode::config, "live backend: credential missing (set BYOC_API_KEY)");
    }
    split_endpoint(config_.endpoint);
}

std::string LiveBackend::request_body(const CompletionRequest& request, const std::string& model) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    json body = {{"messages", messages},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_output_tokens}};
    if (!model.empty()) body["model"] = model;
    return body.dump();
}

Completion parse_completion_body(std::string_view body, const CompletionRequest& request,
                                 const textbudget::TokenCounter& counter) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::backend, std::string("backend returned invalid JSON: ") + e.what());
    }
    Completion c;
    try {
        c.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::backend, "backend response has no choices[0].message.content");
    }
    const auto usage = j.find("usage");
    if (usage != j.end() && usage->is_object() && usage->contains("prompt_tokens")) {
        c.prompt_tokens = usage->at("prompt_tokens").get<std::int64_t>();
        c.output_tokens = usage->value("completion_tokens", std::int64_t{0});
    } else {
        c.prompt_tokens = static_cast<std::int64_t>(counter.count(request.concatenated_content()));
        c.output_tokens = static_cast<std::int64_t>(counter.count(c.text));
    }
    return c;
}

Completion LiveBackend::complete(const CompletionRequest& request) {
    const auto [base, path] = split_endpoint(config_.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    const httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
    const std::string body = request_body(request, config_.model);

    int last_status = 0;
    std::string last_error;
    auto backoff = config_.initial_backoff;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_status = 0;
            last_error = httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status >= 200 && res->status < 300) return parse_completion_body(res->body, request, counter_);
        last_error = res->body.substr(0, 512);
        if (!transient(res->status)) break;
    }
    throw Error(ErrorCode::backend,
                "backend request failed (status " + std::to_string(last_status) + "): " + last_error,
                {{"status", std::to_string(last_status)}});
}

}  // namespace byoc::llm
