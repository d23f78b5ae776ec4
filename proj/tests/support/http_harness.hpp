#pragma once

// Runs a DirectorService on an ephemeral localhost port for the lifetime of
// the object.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dairector/service.hpp"
#include "support/fixtures.hpp"

namespace fixtures {

class LiveService {
 public:
  LiveService(const Director& director, NameMap names, std::optional<SessionStore> store = std::nullopt)
      : service_(director, std::move(names), std::move(store)) {
    service_.mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("cannot bind a test port");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  ~LiveService() {
    server_.stop();
    thread_.join();
  }

  LiveService(const LiveService&) = delete;
  LiveService& operator=(const LiveService&) = delete;

  DirectorService& service() { return service_; }
  httplib::Client& client() { return *client_; }

  struct Reply {
    int status = 0;
    nlohmann::json body;
    std::string raw;
  };

  Reply post(const std::string& path, const std::string& body) {
    auto r = client_->Post(path, body, "application/json");
    if (!r) throw std::runtime_error("request failed: " + path);
    return {r->status, nlohmann::json::parse(r->body, nullptr, false), r->body};
  }

  Reply get(const std::string& path) {
    auto r = client_->Get(path);
    if (!r) throw std::runtime_error("request failed: " + path);
    return {r->status, nlohmann::json::parse(r->body, nullptr, false), r->body};
  }

  // Creates a session and returns its id.
  std::string create(const nlohmann::json& body) {
    auto r = post("/api/sessions", body.dump());
    if (r.status != 200) throw std::runtime_error("create failed: " + r.raw);
    return r.body.at("session_id").get<std::string>();
  }

  Reply advance(const std::string& id, const ScriptedRequest& req) {
    nlohmann::json body = {{"request", req.kind == RequestKind::Platform ? "platform" : "tilt"}};
    if (req.prompt) body["prompt"] = *req.prompt;
    return post("/api/sessions/" + id + "/advance", body.dump());
  }

 private:
  DirectorService service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace fixtures
