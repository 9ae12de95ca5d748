#include "lode/analytics.hpp"
#include "lode/codec.hpp"
#include "lode/playability.hpp"
#include "lode/service/server.hpp"
#include "lode/share.hpp"

#include "fixtures.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <fstream>
#include <thread>

using namespace lode;
using namespace lode::service;
using json = nlohmann::json;

namespace {

Scorer tiny_scorer() {
    return [](const Level& level) { return editor::originality_score(level, *fixtures::tiny_models().all); };
}

StoreConfig config_for(const std::filesystem::path& dir) {
    StoreConfig cfg;
    cfg.data_dir = dir;
    cfg.seed = 42;
    return cfg;
}

/// Server on an ephemeral port, serving from a background thread.
struct Running {
    Server server;
    std::thread thread;
    int port;
    httplib::Client client;

    explicit Running(SessionStore& store)
        : server(store), port(server.bind("127.0.0.1", 0)), client("127.0.0.1", port) {
        thread = std::thread([this] { server.run(); });
        for (int i = 0; i < 500 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(2));
        REQUIRE(server.running());
    }
    ~Running() {
        server.stop();
        thread.join();
    }

    std::pair<int, json> post(const std::string& path, const json& body = json::object()) {
        auto res = client.Post(path, body.dump(), "application/json");
        REQUIRE(res);
        return {res->status, json::parse(res->body)};
    }
    std::pair<int, json> get(const std::string& path) {
        auto res = client.Get(path);
        REQUIRE(res);
        return {res->status, json::parse(res->body)};
    }
};

json brush(int suggestion, int size, int col, int row) {
    return {{"tool", "brush"}, {"suggestion", suggestion}, {"size", size}, {"cell", {{"col", col}, {"row", row}}}};
}

std::string error_code(const json& body) { return body.at("error").at("code").get<std::string>(); }

}  // namespace

TEST_CASE("session lifecycle over HTTP") {
    fixtures::TempDir dir("svc");
    SessionStore store(config_for(dir.path), fixtures::kFakeGenerator, tiny_scorer());
    Running srv(store);

    auto [hs, health] = srv.get("/health");
    CHECK(hs == 200);
    CHECK(health["status"] == "ok");

    auto [cs, created] = srv.post("/api/session");
    REQUIRE(cs == 201);
    const std::string id = created["id"];
    CHECK(created["suggestions"]["items"].size() == 6);
    CHECK(created["budgets"]["refreshes"]["remaining"] == 7);
    CHECK(created["budgets"]["wand"]["remaining"] == 7);
    CHECK(codec::level_from_json(created["level"]) == Level());
    CHECK(created["undo_depth"] == 0);

    auto [gs, got] = srv.get("/api/session/" + id);
    CHECK(gs == 200);
    CHECK(got == created);

    SUBCASE("brush edits copy from the suggestion and update the score") {
        auto [es, edited] = srv.post("/api/session/" + id + "/edit", brush(2, 3, 4, 4));
        REQUIRE(es == 200);
        CHECK(edited["event"]["kind"] == "BrushApply");
        const auto sugg = codec::suggestions_from_json(created["suggestions"]);
        const auto level = codec::level_from_json(edited["level"]);
        for (int r = 4; r < 7; ++r)
            for (int c = 4; c < 7; ++c) CHECK(level.at(c, r) == sugg.at(2).level.at(c, r));
        CHECK(edited["score"].get<double>() == editor::originality_score(level, *fixtures::tiny_models().all));
        CHECK(edited["undo_depth"] == 1);

        auto [us, undone] = srv.post("/api/session/" + id + "/undo");
        CHECK(us == 200);
        CHECK(undone["changed"] == true);
        CHECK(codec::level_from_json(undone["level"]) == Level());
        auto [rs, redone] = srv.post("/api/session/" + id + "/redo");
        CHECK(redone["changed"] == true);
        CHECK(codec::level_from_json(redone["level"]) == level);
        auto [rs2, again] = srv.post("/api/session/" + id + "/redo");
        CHECK(rs2 == 200);
        CHECK(again["changed"] == false);
    }

    SUBCASE("validation errors") {
        auto [s1, b1] = srv.post("/api/session/" + id + "/edit", brush(6, 1, 0, 0));
        CHECK(s1 == 400);
        CHECK(error_code(b1) == "invalid_suggestion");
        auto [s2, b2] = srv.post("/api/session/" + id + "/edit", brush(0, 4, 0, 0));
        CHECK(s2 == 400);
        CHECK(error_code(b2) == "invalid_brush_size");
        auto [s3, b3] = srv.post("/api/session/" + id + "/edit", {{"tool", "paint"}, {"cell", {{"col", 0}, {"row", 0}}}});
        CHECK(s3 == 400);
        CHECK(error_code(b3) == "invalid_request");
        auto res = srv.client.Post("/api/session/" + id + "/edit", "{not json", "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
        CHECK(error_code(json::parse(res->body)) == "invalid_json");
        auto [s4, b4] = srv.get("/api/session/deadbeef");
        CHECK(s4 == 404);
        CHECK(error_code(b4) == "session_not_found");
        auto [s5, b5] = srv.post("/api/session/deadbeef/refresh");
        CHECK(s5 == 404);
        CHECK(srv.get("/api/nothing").first == 404);
    }

    SUBCASE("refresh and wand budgets are enforced with 409") {
        for (int i = 0; i < 7; ++i) {
            auto [s, b] = srv.post("/api/session/" + id + "/refresh");
            REQUIRE(s == 200);
            CHECK(b["budgets"]["refreshes"]["remaining"] == 6 - i);
            CHECK(b["generation"] == i + 1);
        }
        auto [s, b] = srv.post("/api/session/" + id + "/refresh");
        CHECK(s == 409);
        CHECK(error_code(b) == "budget_exhausted");
        for (int i = 0; i < 7; ++i) {
            CHECK(srv.post("/api/session/" + id + "/edit", {{"tool", "wand"}, {"cell", {{"col", i}, {"row", 0}}}}).first == 200);
        }
        auto [ws, wb] = srv.post("/api/session/" + id + "/edit", {{"tool", "wand"}, {"cell", {{"col", 9}, {"row", 0}}}});
        CHECK(ws == 409);
        auto [cls, cleared] = srv.post("/api/session/" + id + "/clear");
        CHECK(cls == 200);
        CHECK(cleared["budgets"]["refreshes"]["remaining"] == 7);
        CHECK(cleared["budgets"]["wand"]["remaining"] == 7);
        CHECK(cleared["event"]["kind"] == "ClearAll");
    }

    SUBCASE("playability check and share links") {
        srv.post("/api/session/" + id + "/edit", brush(0, 5, 0, 0));
        srv.post("/api/session/" + id + "/edit", brush(1, 5, 10, 10));
        auto [ss, spawn] = srv.post("/api/session/" + id + "/edit", {{"tool", "spawn"}, {"cell", {{"col", 20}, {"row", 3}}}});
        REQUIRE(ss == 200);
        const auto level = codec::level_from_json(spawn["level"]);
        CHECK(level.spawn() == Cell{20, 3});

        auto [ks, report] = srv.post("/api/session/" + id + "/check");
        CHECK(ks == 200);
        CHECK(report == codec::report_to_json(check_playability(level)));

        auto [sh, share] = srv.get("/api/session/" + id + "/share");
        CHECK(sh == 200);
        const std::string token = share["token"];
        CHECK(share["path"] == "/level/" + token);
        auto [ls, loaded] = srv.get("/api/level/" + token);
        CHECK(ls == 200);
        CHECK(codec::level_from_json(loaded["level"]) == level);

        std::string tampered = token;
        tampered[4] = tampered[4] == 'A' ? 'B' : 'A';
        auto [ts, tb] = srv.get("/api/level/" + tampered);
        CHECK(ts == 400);
        CHECK(error_code(tb) == "invalid_token");
    }

    SUBCASE("telemetry batches are all-or-nothing") {
        json ok = {{"events", json::array({{{"kind", "Play"}}, {{"kind", "SelectSuggestion"}, {"suggestion", 3}}, {{"kind", "Win"}}})}};
        auto [as, accepted] = srv.post("/api/session/" + id + "/events", ok);
        CHECK(as == 200);
        CHECK(accepted["accepted"] == 3);

        json bad = {{"events", json::array({{{"kind", "Play"}},
                                            {{"kind", "BrushApply"}},
                                            {{"kind", "Win"}, {"score", 99.0}},
                                            {{"kind", "SelectSuggestion"}, {"suggestion", 7}}})}};
        auto [bs, rejected] = srv.post("/api/session/" + id + "/events", bad);
        CHECK(bs == 400);
        CHECK(error_code(rejected) == "invalid_event");
        const auto& details = rejected["error"]["details"];
        REQUIRE(details.size() == 3);
        CHECK(details[0]["index"] == 1);
        CHECK(details[1]["index"] == 2);
        CHECK(details[2]["index"] == 3);
        CHECK(srv.post("/api/session/" + id + "/events", json{{"events", 5}}).first == 400);

        const auto events = store.read(id, [](const SessionEntry& e) { return e.session.events(); });
        REQUIRE(events.size() == 3);
        CHECK(events[2].kind == editor::EventKind::Win);
        CHECK(events[2].level_token == encode_share_token(Level()));
    }
}

TEST_CASE("analytics endpoints aggregate the journal") {
    fixtures::TempDir dir("analytics");
    SessionStore store(config_for(dir.path), fixtures::kFakeGenerator, [](const Level&) { return 12.5; });
    Running srv(store);

    for (const auto& slice : analytics::kSliceNames) {
        auto [s, b] = srv.get("/api/analytics/" + std::string(slice));
        CHECK(s == 200);
    }
    CHECK(srv.get("/api/analytics/suggestions").second["sessions"] == 0);
    auto [us, ub] = srv.get("/api/analytics/bogus");
    CHECK(us == 404);
    CHECK(error_code(ub) == "unknown_slice");

    const std::string a = srv.post("/api/session").second["id"];
    const std::string b = srv.post("/api/session").second["id"];
    srv.post("/api/session/" + a + "/edit", brush(4, 2, 0, 0));
    srv.post("/api/session/" + a + "/edit", brush(4, 1, 3, 3));
    srv.post("/api/session/" + b + "/edit", brush(1, 1, 3, 3));
    srv.post("/api/session/" + a + "/refresh");
    srv.post("/api/session/" + a + "/refresh");
    srv.post("/api/session/" + b + "/events", {{"events", json::array({{{"kind", "SelectSuggestion"}, {"suggestion", 5}}})}});
    srv.post("/api/session/" + b + "/edit", {{"tool", "spawn"}, {"cell", {{"col", 30}, {"row", 21}}}});
    srv.post("/api/session/" + b + "/events", {{"events", json::array({{{"kind", "Win"}}})}});

    const auto sugg = srv.get("/api/analytics/suggestions").second;
    CHECK(sugg["sessions"] == 2);
    CHECK(sugg["interactions"][4]["count"] == 2);
    CHECK(sugg["interactions"][4]["model"] == "Gold");
    CHECK(sugg["interactions"][1]["count"] == 1);
    CHECK(sugg["selections"][5]["count"] == 1);
    const auto refreshes = srv.get("/api/analytics/refreshes").second;
    CHECK(refreshes["histogram"] == json::parse(R"([{"refreshes":0,"sessions":1},{"refreshes":2,"sessions":1}])"));
    const auto orig = srv.get("/api/analytics/originality").second;
    CHECK(orig["levels"] == 1);
    CHECK(orig["scores"] == json::array({{{"session", b}, {"score", 12.5}}}));
    const auto heat = srv.get("/api/analytics/heatmaps").second;
    CHECK(heat["spawn"][21][30] == 1);
    CHECK(heat["tiles"].size() == 7);
    CHECK(heat["tiles"].contains("empty"));
}

TEST_CASE("store replays its journal after a restart") {
    fixtures::TempDir dir("replay");
    std::string id;
    editor::Session expected("x", 0, fixtures::fake_set(1, 0), {}, 0);
    {
        SessionStore store(config_for(dir.path), fixtures::kFakeGenerator, tiny_scorer());
        id = store.create();
        auto noop = [](const SessionEntry&, int) { return 0; };
        store.mutate(id, [](SessionEntry& e) { e.session.apply_brush({3, 5, {1, 1}}); return 0; }, noop);
        store.mutate(id, [](SessionEntry& e) { e.session.refresh(fixtures::kFakeGenerator); return 0; }, noop);
        store.mutate(id, [](SessionEntry& e) { e.session.apply_brush({0, 3, {20, 10}}); return 0; }, noop);
        store.mutate(id, [](SessionEntry& e) { e.session.undo(); return 0; }, noop);
        store.mutate(id, [](SessionEntry& e) { e.session.apply_wand({0, 0}); return 0; }, noop);
        CHECK_THROWS_AS(store.mutate(id, [](SessionEntry& e) { e.session.apply_brush({9, 1, {0, 0}}); return 0; }, noop),
                        editor::EditorError);
        expected = store.read(id, [](const SessionEntry& e) { return e.session; });
    }
    SessionStore again(config_for(dir.path), fixtures::kFakeGenerator, tiny_scorer());
    CHECK(again.session_count() == 1);
    again.read(id, [&](const SessionEntry& e) {
        CHECK(e.session.level() == expected.level());
        CHECK(e.session.suggestions() == expected.suggestions());
        CHECK(e.session.events() == expected.events());
        CHECK(e.session.refreshes_used() == 1);
        CHECK(e.session.wand_tiles_used() == 1);
        CHECK(e.session.undo_depth() == expected.undo_depth());
        CHECK(e.session.redo_depth() == expected.redo_depth());
        CHECK(e.score == editor::originality_score(expected.level(), *fixtures::tiny_models().all));
        return 0;
    });
}

TEST_CASE("snapshot plus journal tail restores state") {
    fixtures::TempDir dir("snapshot");
    auto cfg = config_for(dir.path);
    cfg.snapshot_every = 4;
    std::vector<std::string> ids;
    std::vector<Level> levels;
    {
        SessionStore store(cfg, fixtures::kFakeGenerator, tiny_scorer());
        for (int s = 0; s < 3; ++s) ids.push_back(store.create());
        for (int i = 0; i < 11; ++i) {
            store.mutate(ids[i % 3], [i](SessionEntry& e) { e.session.apply_brush({i % 6, 2, {i, i}}); return 0; },
                         [](const SessionEntry&, int) { return 0; });
        }
        CHECK(std::filesystem::exists(store.snapshot_path()));
        for (const auto& id : ids) levels.push_back(store.read(id, [](const SessionEntry& e) { return e.session.level(); }));
    }
    const auto snap = json::parse(std::ifstream(dir.path / "snapshot.json"));
    CHECK(snap["seq"].get<int>() > 0);
    CHECK(snap["seq"].get<int>() < 14);  // some records live only in the tail
    SessionStore again(cfg, fixtures::kFakeGenerator, tiny_scorer());
    for (std::size_t s = 0; s < ids.size(); ++s) {
        CHECK(again.read(ids[s], [](const SessionEntry& e) { return e.session.level(); }) == levels[s]);
    }
}

TEST_CASE("idle sessions expire and stay expired after restart") {
    fixtures::TempDir dir("expiry");
    auto now = std::make_shared<std::int64_t>(1'000'000);
    Clock clock = [now] { return *now; };
    std::string idle, active;
    {
        SessionStore store(config_for(dir.path), fixtures::kFakeGenerator, tiny_scorer(), clock);
        idle = store.create();
        active = store.create();
        *now += 20LL * 3600 * 1000;
        store.mutate(active, [](SessionEntry& e) { e.session.apply_eraser(1, {0, 0}); return 0; },
                     [](const SessionEntry&, int) { return 0; });
        *now += 5LL * 3600 * 1000;
        CHECK(store.expire_idle() == 1);
        CHECK(store.session_count() == 1);
        try {
            store.read(idle, [](const SessionEntry&) { return 0; });
            FAIL("expired session still readable");
        } catch (const ApiError& e) {
            CHECK(e.status() == 404);
        }
    }
    SessionStore again(config_for(dir.path), fixtures::kFakeGenerator, tiny_scorer(), clock);
    CHECK(again.session_count() == 1);
    CHECK_NOTHROW(again.read(active, [](const SessionEntry&) { return 0; }));
}

TEST_CASE("a truncated final journal line is ignored on restart") {
    fixtures::TempDir dir("torn");
    std::string id;
    {
        SessionStore store(config_for(dir.path), fixtures::kFakeGenerator, tiny_scorer());
        id = store.create();
    }
    {
        std::ofstream out(dir.path / "journal.jsonl", std::ios::app);
        out << R"({"seq": 2, "type": "ev)";
    }
    SessionStore again(config_for(dir.path), fixtures::kFakeGenerator, tiny_scorer());
    CHECK(again.session_count() == 1);
    again.mutate(id, [](SessionEntry& e) { e.session.apply_brush({0, 1, {0, 0}}); return 0; },
                 [](const SessionEntry&, int) { return 0; });
    const auto read = journal::read(again.journal_path());
    CHECK_FALSE(read.truncated_tail);
    CHECK(read.records.size() == 2);
}

TEST_CASE("store without models refuses new sessions with 503") {
    fixtures::TempDir dir("nomodels");
    SessionStore store(config_for(dir.path), nullptr, tiny_scorer());
    try {
        store.create();
        FAIL("expected ApiError");
    } catch (const ApiError& e) {
        CHECK(e.status() == 503);
        CHECK(e.code() == "models_unavailable");
    }
}

TEST_CASE("score of the empty level matches a direct originality call") {
    fixtures::TempDir dir("score");
    const auto& models = fixtures::tiny_models();
    SessionStore store(config_for(dir.path), editor::model_generator(models), tiny_scorer());
    const auto id = store.create();
    const double score = store.read(id, [](const SessionEntry& e) { return e.score; });
    CHECK(score == editor::originality_score(Level(), *models.all));
    CHECK(score >= 0.0);
    CHECK(score <= 100.0);
}

TEST_CASE("concurrent edits on different sessions are all journaled") {
    fixtures::TempDir dir("concurrent");
    SessionStore store(config_for(dir.path), fixtures::kFakeGenerator, [](const Level&) { return 0.0; });
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) ids.push_back(store.create());
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 25; ++i)
                store.mutate(ids[static_cast<std::size_t>(t)],
                             [i](SessionEntry& e) { e.session.apply_brush({i % 6, 1, {i, 0}}); return 0; },
                             [](const SessionEntry&, int) { return 0; });
        });
    }
    for (auto& th : threads) th.join();
    const auto read = journal::read(store.journal_path());
    CHECK(read.records.size() == 4 + 100);
    for (std::size_t i = 0; i < read.records.size(); ++i) CHECK(read.records[i].seq == i + 1);
}
