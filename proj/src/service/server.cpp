#include "lode/service/server.hpp"

#include "lode/analytics.hpp"
#include "lode/playability.hpp"
#include "lode/share.hpp"

#include <httplib.h>

namespace lode::service {

using codec::json;

namespace {

json budget_json(int used, int max) { return {{"used", used}, {"max", max}, {"remaining", max - used}}; }

json descriptor(const SessionEntry& entry) {
    const auto& s = entry.session;
    return {{"id", s.id()},
            {"level", codec::level_to_json(s.level())},
            {"suggestions", codec::suggestions_to_json(s.suggestions())},
            {"budgets",
             {{"refreshes", budget_json(s.refreshes_used(), s.budgets().max_refreshes)},
              {"wand", budget_json(s.wand_tiles_used(), s.budgets().max_wand_tiles)}}},
            {"score", entry.score},
            {"undo_depth", s.undo_depth()},
            {"redo_depth", s.redo_depth()},
            {"generation", s.next_generation() - 1}};
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw ApiError(400, "invalid_json", e.what());
    }
}

ApiError from_editor(const editor::EditorError& e) {
    const int status = e.code() == editor::EditorError::Code::BudgetExhausted ? 409 : 400;
    return ApiError(status, std::string(editor::error_code_name(e.code())), e.what());
}

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const ApiError& e) {
            json err{{"code", e.code()}, {"message", e.what()}};
            if (!e.details().is_null()) err["details"] = e.details();
            send(res, e.status(), {{"error", err}});
        } catch (const editor::EditorError& e) {
            const auto api = from_editor(e);
            send(res, api.status(), {{"error", {{"code", api.code()}, {"message", api.what()}}}});
        } catch (const codec::CodecError& e) {
            send(res, 400, {{"error", {{"code", "invalid_request"}, {"message", e.what()}, {"field", e.path()}}}});
        } catch (const std::exception& e) {
            send(res, 500, {{"error", {{"code", "internal"}, {"message", e.what()}}}});
        }
    };
}

editor::EditEvent client_event(const json& j, const std::string& path, const SessionEntry& entry, std::int64_t now) {
    if (!j.is_object()) throw codec::CodecError(path, "expected an object");
    json copy = j;
    if (!copy.contains("t")) copy["t"] = now;
    const auto kind_it = copy.find("kind");
    if (kind_it != copy.end() && kind_it->is_string()) {
        const auto kind = editor::event_kind_from_name(kind_it->get<std::string>());
        if (kind && !editor::is_telemetry(*kind)) {
            throw codec::CodecError(path + ".kind", kind_it->get<std::string>() + " is produced by the edit endpoints");
        }
        if (kind == editor::EventKind::Win) {
            if (copy.contains("level") || copy.contains("score")) {
                throw codec::CodecError(path, "Win level and score are filled in by the server");
            }
            copy["level"] = encode_share_token(entry.session.level());
            copy["score"] = entry.score;
        }
    }
    return codec::event_from_json(copy, path);
}

}  // namespace

struct Server::Impl {
    SessionStore& store;
    httplib::Server http;

    explicit Impl(SessionStore& s) : store(s) { routes(); }

    void routes() {
        http.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });

        http.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
                     send(res, 200, {{"status", "ok"}, {"sessions", store.session_count()}});
                 }));

        http.Post("/api/session", guarded([this](const httplib::Request&, httplib::Response& res) {
                      const auto id = store.create();
                      send(res, 201, store.read(id, [](const SessionEntry& e) { return descriptor(e); }));
                  }));

        http.Get(R"(/api/session/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                     send(res, 200, store.read(req.matches[1], [](const SessionEntry& e) { return descriptor(e); }));
                 }));

        http.Post(R"(/api/session/([0-9a-f]+)/edit)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      const json body = parse_body(req);
                      send(res, 200, store.mutate(
                                         req.matches[1],
                                         [&](SessionEntry& e) { return codec::event_to_json(apply_edit(e.session, body, store.now())); },
                                         with_descriptor));
                  }));

        http.Post(R"(/api/session/([0-9a-f]+)/refresh)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      const auto& generator = store.generator();
                      send(res, 200, store.mutate(
                                         req.matches[1],
                                         [&](SessionEntry& e) { return codec::event_to_json(e.session.refresh(generator, store.now())); },
                                         with_descriptor));
                  }));

        for (const std::string op : {"undo", "redo"}) {
            http.Post(R"(/api/session/([0-9a-f]+)/)" + op,
                      guarded([this, op](const httplib::Request& req, httplib::Response& res) {
                          send(res, 200, store.mutate(
                                             req.matches[1],
                                             [&](SessionEntry& e) {
                                                 const bool changed = op == "undo" ? e.session.undo(store.now())
                                                                                   : e.session.redo(store.now());
                                                 return json{{"changed", changed}};
                                             },
                                             [](const SessionEntry& e, json r) {
                                                 auto d = descriptor(e);
                                                 d["changed"] = r["changed"];
                                                 return d;
                                             }));
                      }));
        }

        http.Post(R"(/api/session/([0-9a-f]+)/clear)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      const auto& generator = store.generator();
                      send(res, 200, store.mutate(
                                         req.matches[1],
                                         [&](SessionEntry& e) { return codec::event_to_json(e.session.clear_all(generator, store.now())); },
                                         with_descriptor));
                  }));

        http.Post(R"(/api/session/([0-9a-f]+)/events)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      const json body = parse_body(req);
                      const auto it = body.find("events");
                      if (it == body.end() || !it->is_array()) {
                          throw ApiError(400, "invalid_request", "body must be {\"events\": [...]}");
                      }
                      send(res, 200, store.mutate(
                                         req.matches[1],
                                         [&](SessionEntry& e) {
                                             std::vector<editor::EditEvent> events;
                                             json problems = json::array();
                                             const auto now = store.now();
                                             for (std::size_t i = 0; i < it->size(); ++i) {
                                                 const auto path = "events[" + std::to_string(i) + "]";
                                                 try {
                                                     events.push_back(client_event((*it)[i], path, e, now));
                                                 } catch (const codec::CodecError& err) {
                                                     problems.push_back({{"index", i}, {"field", err.path()}, {"message", err.what()}});
                                                 }
                                             }
                                             if (!problems.empty()) {
                                                 throw ApiError(400, "invalid_event",
                                                                std::to_string(problems.size()) + " event(s) rejected", problems);
                                             }
                                             for (auto& ev : events) e.session.record(std::move(ev));
                                             return json{{"accepted", events.size()}};
                                         },
                                         [](const SessionEntry&, json r) { return r; }));
                  }));

        http.Post(R"(/api/session/([0-9a-f]+)/check)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      send(res, 200, store.read(req.matches[1], [](const SessionEntry& e) {
                               return codec::report_to_json(check_playability(e.session.level()));
                           }));
                  }));

        http.Get(R"(/api/session/([0-9a-f]+)/share)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                     send(res, 200, store.read(req.matches[1], [](const SessionEntry& e) {
                              const auto token = encode_share_token(e.session.level());
                              return json{{"token", token}, {"path", "/level/" + token}};
                          }));
                 }));

        http.Get(R"(/api/level/([A-Za-z0-9_-]+))", guarded([](const httplib::Request& req, httplib::Response& res) {
                     try {
                         send(res, 200, {{"level", codec::level_to_json(decode_share_token(req.matches[1].str()))}});
                     } catch (const ShareTokenError& e) {
                         throw ApiError(400, "invalid_token", e.what());
                     }
                 }));

        http.Get(R"(/api/analytics/([a-z]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                     const std::string slice = req.matches[1];
                     if (std::find(analytics::kSliceNames.begin(), analytics::kSliceNames.end(), slice) ==
                         analytics::kSliceNames.end()) {
                         throw ApiError(404, "unknown_slice", "no analytics slice '" + slice + "'");
                     }
                     const auto records = journal::read(store.journal_path()).records;
                     send(res, 200, analytics::slice_to_json(analytics::compute(records), slice));
                 }));

        http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                send(res, res.status, {{"error", {{"code", "not_found"}, {"message", "no such route"}}}});
            }
        });
    }

    static json with_descriptor(const SessionEntry& e, json event) {
        auto d = descriptor(e);
        d["event"] = std::move(event);
        return d;
    }

    static const editor::EditEvent& apply_edit(editor::Session& s, const json& body, std::int64_t now) {
        if (!body.is_object()) throw codec::CodecError("body", "expected an object");
        const auto tool_it = body.find("tool");
        if (tool_it == body.end() || !tool_it->is_string()) throw codec::CodecError("tool", "missing");
        const auto tool = tool_it->get<std::string>();
        const Cell cell = codec::cell_from_json(body.contains("cell") ? body["cell"] : json(), "cell");
        auto int_field = [&](const char* key) {
            const auto it = body.find(key);
            if (it == body.end() || !it->is_number_integer()) throw codec::CodecError(key, "expected an integer");
            return it->get<int>();
        };
        if (tool == "brush") return s.apply_brush({int_field("suggestion"), int_field("size"), cell}, now);
        if (tool == "erase") return s.apply_eraser(int_field("size"), cell, now);
        if (tool == "wand") return s.apply_wand(cell, now);
        if (tool == "spawn") return s.place_spawn(cell, now);
        throw codec::CodecError("tool", "unknown tool '" + tool + "'");
    }
};

Server::Server(SessionStore& store) : impl_(std::make_unique<Impl>(store)) {}
Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->http.bind_to_any_port(host);
        if (bound < 0) throw std::runtime_error("cannot bind " + host);
        return bound;
    }
    if (!impl_->http.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void Server::run() { impl_->http.listen_after_bind(); }
void Server::stop() {
    if (impl_ && impl_->http.is_running()) impl_->http.stop();
}
bool Server::running() const { return impl_->http.is_running(); }

}  // namespace lode::service
