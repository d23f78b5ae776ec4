#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "dairector/session.hpp"

namespace dairector {

inline constexpr std::string_view kVersion = "0.1.0";

// HTTP front-end over a Director. Requests on one session are serialized by
// that session's mutex; distinct sessions proceed independently.
class DirectorService {
 public:
  DirectorService(const Director& director, NameMap default_names, std::optional<SessionStore> store = std::nullopt)
      : director_(director), default_names_(std::move(default_names)), store_(std::move(store)) {}

  void mount(httplib::Server& server) {
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      reply_error(res, 500, "internal", what);
    });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, {{"status", "ok"},
                       {"version", kVersion},
                       {"corpus_hash", director_.corpus_hash()},
                       {"plot_corpus_hash", director_.graph().content_hash()},
                       {"trope_corpus_hash", director_.tropes().content_hash()},
                       {"model_hash", director_.model_hash()}});
    });

    server.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { create(req, res); });
    });

    server.Post(R"(/api/sessions/([^/]+)/advance)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { advance(req.matches[1], req, res); });
    });

    server.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto slot = find(req.matches[1]);
        std::lock_guard lock(slot->mutex);
        reply(res, 200, session_body(slot->session));
      });
    });
  }

  // Writes every in-memory session to the store.
  void persist_all() {
    if (!store_) return;
    std::lock_guard lock(map_mutex_);
    for (auto& [id, slot] : sessions_) {
      std::lock_guard slock(slot->mutex);
      store_->save(slot->session);
    }
  }

  static nlohmann::json session_body(const Session& s) {
    return {{"session_id", s.id()}, {"ended", s.ended()}, {"seq", s.last_seq()}, {"transcript", transcript_json(s)}};
  }

 private:
  struct Slot {
    std::mutex mutex;
    Session session;
  };

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void reply_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
    reply(res, status, {{"error", {{"status", status}, {"code", code}, {"message", message}}}});
  }

  template <class Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, 400, "bad_request", e.what());
    } catch (const NotFoundError& e) {
      reply_error(res, 404, "not_found", e.what());
    } catch (const StateError& e) {
      reply_error(res, 409, "conflict", e.what());
    } catch (const InvalidArgument& e) {
      reply_error(res, 400, "bad_request", e.what());
    } catch (const HashMismatchError& e) {
      reply_error(res, 409, "hash_mismatch", e.what());
    } catch (const ParseError& e) {
      reply_error(res, 400, "bad_request", e.what());
    }
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    auto j = nlohmann::json::parse(req.body);
    if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
    return j;
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    SessionConfig cfg;
    if (body.contains("seed") && !body["seed"].is_null()) {
      if (!body["seed"].is_number_integer()) throw InvalidArgument("seed must be an integer");
      cfg.seed = body["seed"].get<std::uint64_t>();
    }
    if (body.contains("root") && !body["root"].is_null()) {
      if (!body["root"].is_string()) throw InvalidArgument("root must be a string");
      cfg.root = body["root"].get<std::string>();
    }
    if (body.contains("max_depth") && !body["max_depth"].is_null()) {
      if (!body["max_depth"].is_number_integer() || body["max_depth"].get<long long>() < 1)
        throw InvalidArgument("max_depth must be a positive integer");
      cfg.max_depth = body["max_depth"].get<std::size_t>();
    }
    auto slot = std::make_shared<Slot>();
    slot->session = director_.create_session(default_names_, cfg);
    if (store_) store_->save(slot->session);
    nlohmann::json out = {{"session_id", slot->session.id()},
                          {"entry", to_json(slot->session.transcript().front())},
                          {"ended", false},
                          {"seq", slot->session.last_seq()}};
    {
      std::lock_guard lock(map_mutex_);
      sessions_.emplace(slot->session.id(), slot);
    }
    reply(res, 200, out);
  }

  void advance(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto slot = find(id);
    auto body = parse_body(req);
    if (!body.contains("request") || !body["request"].is_string())
      throw InvalidArgument("body needs \"request\": \"platform\" | \"tilt\"");
    RequestKind kind = parse_request_kind(body["request"].get<std::string>());
    std::optional<std::string> prompt;
    if (body.contains("prompt") && !body["prompt"].is_null()) {
      if (!body["prompt"].is_string()) throw InvalidArgument("prompt must be a string");
      prompt = body["prompt"].get<std::string>();
    }
    std::lock_guard lock(slot->mutex);
    const auto& entry = director_.handle_request(slot->session, kind, prompt);
    nlohmann::json out = {{"entry", to_json(entry)}, {"ended", slot->session.ended()}, {"seq", entry.seq}};
    if (store_) store_->save(slot->session);
    reply(res, 200, out);
  }

  std::shared_ptr<Slot> find(const std::string& id) {
    std::lock_guard lock(map_mutex_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    if (store_ && store_->exists(id)) {
      auto slot = std::make_shared<Slot>();
      slot->session = store_->load(id, director_);
      sessions_.emplace(id, slot);
      return slot;
    }
    throw NotFoundError("unknown session '" + id + "'");
  }

  const Director& director_;
  NameMap default_names_;
  std::optional<SessionStore> store_;
  std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

}  // namespace dairector
