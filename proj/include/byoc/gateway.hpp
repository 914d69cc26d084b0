#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "byoc/config.hpp"
#include "byoc/error.hpp"
#include "byoc/llm.hpp"
#include "byoc/store.hpp"
#include "byoc/trainer.hpp"

namespace byoc::gateway {

/// The five codes clients see.
enum class ApiCode { validation, state, parse, backend, not_found };
const char* to_string(ApiCode code);
ApiCode api_code(ErrorCode code);
int http_status(ApiCode code);

/// `live` or `mock:<script.jsonl>`.
std::shared_ptr<llm::Backend> make_backend(const std::string& spec, const Config& config);

/// Parses a JSON config file; any syntax error or unknown key is a config error.
Config load_config(const std::string& path);

/// Session, classification and evaluation operations shared by the HTTP
/// service and the CLI. Sessions are checkpointed to the store after every
/// state transition and reloaded on demand, so a restarted engine resumes.
class Engine {
public:
    Engine(std::shared_ptr<store::Store> store, std::shared_ptr<llm::Backend> backend, Config defaults);

    nlohmann::json create_session(const nlohmann::json& body);
    nlohmann::json snapshot(const std::string& session_id);
    nlohmann::json question(const std::string& session_id);
    nlohmann::json answer(const std::string& session_id, const nlohmann::json& body);
    nlohmann::json predict(const std::string& session_id);
    nlohmann::json label(const std::string& session_id, const nlohmann::json& body);
    nlohmann::json finalize(const std::string& session_id, const nlohmann::json& body);

    nlohmann::json list_classifiers();
    nlohmann::json get_classifier(const std::string& id);
    nlohmann::json classify(const std::string& artifact_id, const nlohmann::json& body);

    nlohmann::json create_evaluation(const nlohmann::json& body);
    nlohmann::json get_evaluation(const std::string& id);

    store::Store& store() { return *store_; }
    const Config& defaults() const { return defaults_; }

    /// Writes every cached session checkpoint.
    void flush();

private:
    struct Slot {
        std::mutex mu;
        std::unique_ptr<trainer::TrainingSession> session;
    };

    std::shared_ptr<Slot> slot(const std::string& id);
    template <typename F>
    nlohmann::json with_session(const std::string& id, F&& fn);
    void checkpoint(const std::string& id, const trainer::TrainingSession& s);

    std::shared_ptr<store::Store> store_;
    std::shared_ptr<llm::Backend> backend_;
    Config defaults_;
    std::mutex slots_mu_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
};

nlohmann::json session_snapshot(const std::string& id, const trainer::TrainingSession& s);
nlohmann::json error_body(const Error& e);

/// HTTP front end over an Engine.
class Server {
public:
    explicit Server(std::shared_ptr<Engine> engine);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds (port 0 picks a free one) and serves on a background thread.
    /// Throws config when the port cannot be bound.
    int start(const std::string& host, int port);
    /// Blocks in the caller's thread.
    void listen(const std::string& host, int port);
    void stop();
    int port() const noexcept { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::shared_ptr<Engine> engine_;
    std::thread thread_;
    int port_ = 0;
};

/// Exit status: 0 success, 1 domain error, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace byoc::gateway
