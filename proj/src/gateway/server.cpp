#include <httplib.h>

#include "byoc/gateway.hpp"

namespace byoc::gateway {

using nlohmann::json;

struct Server::Impl {
    httplib::Server http;
};

namespace {

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::validation, std::string("request body is not valid JSON: ") + e.what());
    }
}

template <typename F>
httplib::Server::Handler wrap(F fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            send(res, 200, fn(req));
        } catch (const Error& e) {
            send(res, http_status(api_code(e.code())), error_body(e));
        } catch (const json::exception& e) {
            send(res, 400, error_body(Error(ErrorCode::validation, e.what())));
        } catch (const std::exception& e) {
            send(res, 500, {{"error", {{"code", "backend"}, {"message", e.what()}, {"detail", json::object()}}}});
        }
    };
}

}  // namespace

Server::Server(std::shared_ptr<Engine> engine) : impl_(std::make_unique<Impl>()), engine_(std::move(engine)) {
    auto& http = impl_->http;
    auto e = engine_;

    http.Post("/classifiers/sessions", wrap([e](const httplib::Request& r) { return e->create_session(parse_body(r)); }));
    http.Get(R"(/sessions/([^/]+))", wrap([e](const httplib::Request& r) { return e->snapshot(r.matches[1]); }));
    http.Post(R"(/sessions/([^/]+)/question)",
              wrap([e](const httplib::Request& r) { return e->question(r.matches[1]); }));
    http.Post(R"(/sessions/([^/]+)/answer)",
              wrap([e](const httplib::Request& r) { return e->answer(r.matches[1], parse_body(r)); }));
    http.Post(R"(/sessions/([^/]+)/predict)",
              wrap([e](const httplib::Request& r) { return e->predict(r.matches[1]); }));
    http.Post(R"(/sessions/([^/]+)/label)",
              wrap([e](const httplib::Request& r) { return e->label(r.matches[1], parse_body(r)); }));
    http.Post(R"(/sessions/([^/]+)/finalize)",
              wrap([e](const httplib::Request& r) { return e->finalize(r.matches[1], parse_body(r)); }));
    http.Get("/classifiers", wrap([e](const httplib::Request&) { return e->list_classifiers(); }));
    http.Get(R"(/classifiers/([^/]+))",
             wrap([e](const httplib::Request& r) { return e->get_classifier(r.matches[1]); }));
    http.Post(R"(/classifiers/([^/]+)/classify)",
              wrap([e](const httplib::Request& r) { return e->classify(r.matches[1], parse_body(r)); }));
    http.Post("/evaluations", wrap([e](const httplib::Request& r) { return e->create_evaluation(parse_body(r)); }));
    http.Get(R"(/evaluations/([^/]+))",
             wrap([e](const httplib::Request& r) { return e->get_evaluation(r.matches[1]); }));

    http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (res.status == 404 && res.body.empty()) {
            send(res, 404, error_body(Error(ErrorCode::not_found, "no route for " + req.method + " " + req.path)));
        }
    });
}

Server::~Server() { stop(); }

int Server::start(const std::string& host, int port) {
    auto& http = impl_->http;
    port_ = port == 0 ? http.bind_to_any_port(host) : (http.bind_to_port(host, port) ? port : -1);
    if (port_ <= 0) {
        port_ = 0;
        throw Error(ErrorCode::config, "cannot bind " + host + ":" + std::to_string(port), {{"port", std::to_string(port)}});
    }
    thread_ = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
    return port_;
}

void Server::listen(const std::string& host, int port) {
    start(host, port);
    if (thread_.joinable()) thread_.join();
    engine_->flush();
}

void Server::stop() {
    if (impl_) impl_->http.stop();
    if (thread_.joinable()) thread_.join();
    if (engine_) engine_->flush();
}

}  // namespace byoc::gateway
