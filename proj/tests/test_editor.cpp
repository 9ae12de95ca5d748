#include "lode/editor.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace lode;
using namespace lode::editor;

namespace {

const SuggestionGenerator& kFake = fixtures::kFakeGenerator;

Session fresh(std::uint64_t seed = 1) { return Session("s", seed, kFake, {}, 0); }

EditorError::Code code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const EditorError& e) {
        return e.code();
    }
    FAIL("expected EditorError");
    return EditorError::Code::InvalidEvent;
}

}  // namespace

TEST_CASE("fresh session") {
    const auto s = fresh();
    CHECK(s.level() == Level());
    CHECK(s.suggestions().items.size() == 6);
    CHECK(s.suggestions().seed == s.generation_seed(0));
    CHECK(s.refreshes_used() == 0);
    CHECK(s.wand_tiles_used() == 0);
    CHECK(s.refreshes_remaining() == 7);
    CHECK(s.wand_tiles_remaining() == 7);
    CHECK(s.events().empty());
}

TEST_CASE("brush copies the same coordinates from the chosen suggestion") {
    auto s = fresh();
    const Level& source = s.suggestions().at(4).level;
    const auto& e = s.apply_brush({4, 3, {10, 5}}, 99);
    CHECK(e.kind == EventKind::BrushApply);
    CHECK(e.timestamp_ms == 99);
    CHECK(e.changes.size() == 9);
    for (int r = 0; r < kLevelHeight; ++r)
        for (int c = 0; c < kLevelWidth; ++c) {
            const bool inside = c >= 10 && c < 13 && r >= 5 && r < 8;
            CHECK(s.level().at(c, r) == (inside ? source.at(c, r) : TileKind::Empty));
        }
}

TEST_CASE("brush footprint is anchored top-left and clipped at the border") {
    Level level;
    CHECK(footprint(level, {31, 21}, 5).size() == 1);
    CHECK(footprint(level, {30, 0}, 3).size() == 6);
    CHECK(footprint(level, {-2, -2}, 3).size() == 1);
    CHECK(footprint(level, {-5, 0}, 5).empty());
    auto s = fresh();
    s.apply_brush({0, 5, {29, 19}});
    CHECK(s.events().back().changes.size() == 9);
}

TEST_CASE("brush validation errors") {
    auto s = fresh();
    CHECK(code_of([&] { s.apply_brush({6, 1, {0, 0}}); }) == EditorError::Code::InvalidSuggestion);
    CHECK(code_of([&] { s.apply_brush({-1, 1, {0, 0}}); }) == EditorError::Code::InvalidSuggestion);
    CHECK(code_of([&] { s.apply_brush({0, 4, {0, 0}}); }) == EditorError::Code::InvalidBrushSize);
    CHECK(code_of([&] { s.apply_brush({0, 1, {40, 0}}); }) == EditorError::Code::EmptyFootprint);
    CHECK(s.events().empty());
    CHECK(s.undo_depth() == 0);
}

TEST_CASE("eraser writes Empty and clears a covered spawn") {
    auto s = fresh();
    s.apply_brush({0, 5, {0, 0}});
    s.place_spawn({12, 12});
    s.apply_eraser(2, {0, 0});
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) CHECK(s.level().at(c, r) == TileKind::Empty);
    s.apply_eraser(1, {12, 12});
    CHECK_FALSE(s.level().spawn().has_value());
    CHECK(code_of([&] { s.apply_eraser(4, {0, 0}); }) == EditorError::Code::InvalidBrushSize);
}

TEST_CASE("spawn placement") {
    auto s = fresh();
    s.place_spawn({3, 4});
    CHECK(s.level().spawn() == Cell{3, 4});
    CHECK(code_of([&] { s.place_spawn({32, 0}); }) == EditorError::Code::OutOfBounds);
    // cover a cell with solid via the wand (corner: 5 of 8 neighbours are out of bounds)
    s.apply_wand({0, 0});
    REQUIRE(s.level().at(0, 0) == TileKind::Solid);
    CHECK(code_of([&] { s.place_spawn({0, 0}); }) == EditorError::Code::InvalidPlacement);
    // a blocking tile written over the spawn removes it
    s.place_spawn({0, 1});
    s.apply_wand({0, 1});
    CHECK(s.level().at(0, 1) == TileKind::Solid);
    CHECK_FALSE(s.level().spawn().has_value());
}

TEST_CASE("wand majority uses the 8 neighbours, out of bounds as Solid, ties to the lower index") {
    Level level;
    CHECK(wand_majority(level, {5, 5}) == TileKind::Empty);
    CHECK(wand_majority(level, {0, 0}) == TileKind::Solid);     // 5 out of bounds vs 3 empty
    CHECK(wand_majority(level, {0, 10}) == TileKind::Empty);    // 3 out of bounds vs 5 empty
    level.set(4, 4, TileKind::Gold);
    level.set(5, 4, TileKind::Gold);
    level.set(6, 4, TileKind::Gold);
    level.set(4, 5, TileKind::Gold);
    level.set(6, 6, TileKind::Ladder);
    CHECK(wand_majority(level, {5, 5}) == TileKind::Gold);  // 4 gold, 3 empty, 1 ladder
    level.set(4, 6, TileKind::Ladder);
    level.set(5, 6, TileKind::Ladder);
    level.set(6, 5, TileKind::Ladder);
    CHECK(wand_majority(level, {5, 5}) == TileKind::Ladder);  // 4 ladder vs 4 gold: ladder has the lower index
    level.set(5, 5, TileKind::Rope);  // the centre cell does not vote
    CHECK(wand_majority(level, {5, 5}) == TileKind::Ladder);
}

TEST_CASE("wand budget: seven tiles, the eighth is a conflict") {
    auto s = fresh();
    for (int i = 0; i < 7; ++i) s.apply_wand({i, 10});
    CHECK(s.wand_tiles_remaining() == 0);
    CHECK(code_of([&] { s.apply_wand({20, 10}); }) == EditorError::Code::BudgetExhausted);
    // undo does not give budget back
    CHECK(s.undo() == false);  // wand on empty surroundings changed nothing
    CHECK(code_of([&] { s.apply_wand({20, 10}); }) == EditorError::Code::BudgetExhausted);
    CHECK(code_of([&] { fresh().apply_wand({-1, 0}); }) == EditorError::Code::OutOfBounds);
}

TEST_CASE("refresh budget: seven refreshes, new seeds each time, not undoable") {
    auto s = fresh();
    s.apply_brush({0, 2, {0, 0}});
    const Level after_brush = s.level();
    auto previous = s.suggestions();
    for (int i = 1; i <= 7; ++i) {
        const auto& e = s.refresh(kFake, i);
        CHECK(e.kind == EventKind::Refresh);
        CHECK(s.suggestions().generation == i);
        CHECK(s.suggestions().seed == s.generation_seed(i));
        CHECK(s.suggestions() != previous);
        previous = s.suggestions();
    }
    CHECK(code_of([&] { s.refresh(kFake); }) == EditorError::Code::BudgetExhausted);
    CHECK(s.level() == after_brush);
    REQUIRE(s.undo());
    CHECK(s.level() == Level());
    CHECK(s.suggestions() == previous);
}

TEST_CASE("undo and redo follow snapshot semantics") {
    auto s = fresh();
    CHECK_FALSE(s.undo());
    CHECK_FALSE(s.redo());
    s.apply_brush({1, 3, {0, 0}});
    const Level one = s.level();
    s.apply_brush({2, 3, {5, 5}});
    const Level two = s.level();
    REQUIRE(s.undo());
    CHECK(s.level() == one);
    REQUIRE(s.redo());
    CHECK(s.level() == two);
    REQUIRE(s.undo());
    s.apply_eraser(1, {0, 0});
    CHECK(s.redo_depth() == 0);
    CHECK_FALSE(s.redo());
}

TEST_CASE("undo/redo property: random sequences match a reference history") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = fresh(trial + 1);
        std::vector<Level> past{Level()};
        std::size_t cursor = 0;  // reference: linear history with a cursor
        for (int step = 0; step < 60; ++step) {
            const int op = static_cast<int>(rng() % 5);
            const Cell cell{static_cast<int>(rng() % 32), static_cast<int>(rng() % 22)};
            if (op <= 1) {
                const int size = kBrushSizes[rng() % 4];
                const int id = static_cast<int>(rng() % 6);
                s.apply_brush({id, size, cell});
            } else if (op == 2) {
                s.apply_eraser(kBrushSizes[rng() % 4], cell);
            } else if (op == 3) {
                const bool ok = s.undo();
                CHECK(ok == (cursor > 0));
                if (ok) --cursor;
                REQUIRE(s.level() == past[cursor]);
                continue;
            } else {
                const bool ok = s.redo();
                CHECK(ok == (cursor + 1 < past.size()));
                if (ok) ++cursor;
                REQUIRE(s.level() == past[cursor]);
                continue;
            }
            if (s.level() != past[cursor]) {
                past.resize(cursor + 1);
                past.push_back(s.level());
                ++cursor;
            }
            REQUIRE(s.undo_depth() == cursor);
            REQUIRE(s.redo_depth() == past.size() - 1 - cursor);
        }
    }
}

TEST_CASE("clear all resets level, stacks and budgets and installs new suggestions") {
    auto s = fresh();
    s.apply_brush({0, 5, {3, 3}});
    s.apply_wand({0, 0});
    s.refresh(kFake);
    const auto before = s.suggestions();
    const auto& e = s.clear_all(kFake);
    CHECK(e.kind == EventKind::ClearAll);
    CHECK(s.level() == Level());
    CHECK(s.undo_depth() == 0);
    CHECK(s.redo_depth() == 0);
    CHECK(s.refreshes_used() == 0);
    CHECK(s.wand_tiles_used() == 0);
    CHECK(s.suggestions() != before);
    CHECK(s.suggestions().generation == 2);
}

TEST_CASE("telemetry events") {
    auto s = fresh();
    EditEvent play;
    play.kind = EventKind::Play;
    s.record(play);
    EditEvent select;
    select.kind = EventKind::SelectSuggestion;
    select.suggestion_id = 3;
    s.record(select);
    EditEvent bad_select = select;
    bad_select.suggestion_id = 9;
    CHECK(code_of([&] { s.record(bad_select); }) == EditorError::Code::InvalidEvent);
    EditEvent brush;
    brush.kind = EventKind::BrushApply;
    CHECK(code_of([&] { s.record(brush); }) == EditorError::Code::InvalidEvent);
    EditEvent win;
    win.kind = EventKind::Win;
    CHECK(code_of([&] { s.record(win); }) == EditorError::Code::InvalidEvent);  // needs level and score
    win.level_token = "AQ";
    win.score = 30.0;
    s.record(win);
    CHECK(s.events().size() == 3);
}

TEST_CASE("event payload validation") {
    EditEvent e;
    e.kind = EventKind::Undo;
    CHECK_FALSE(validate_event(e).has_value());
    e.cell = Cell{0, 0};
    CHECK(validate_event(e).has_value());
    EditEvent brush;
    brush.kind = EventKind::BrushApply;
    brush.suggestion_id = 1;
    brush.size = 3;
    brush.cell = Cell{1, 1};
    CHECK_FALSE(validate_event(brush).has_value());
    brush.size = 4;
    CHECK(validate_event(brush).has_value());
    EditEvent refresh;
    refresh.kind = EventKind::Refresh;
    CHECK(validate_event(refresh).has_value());
    for (int k = 0; k < 12; ++k) {
        const auto kind = static_cast<EventKind>(k);
        CHECK(event_kind_from_name(event_kind_name(kind)) == kind);
    }
    CHECK_FALSE(event_kind_from_name("Teleport").has_value());
}

TEST_CASE("replaying the event log reproduces the session") {
    std::mt19937_64 rng(5);
    auto s = fresh(17);
    const auto initial = s.suggestions();
    for (int i = 0; i < 200; ++i) {
        const Cell cell{static_cast<int>(rng() % 32), static_cast<int>(rng() % 22)};
        try {
            switch (rng() % 8) {
                case 0: s.apply_eraser(kBrushSizes[rng() % 4], cell); break;
                case 1: s.apply_wand(cell); break;
                case 2: s.place_spawn(cell); break;
                case 3: s.refresh(kFake); break;
                case 4: s.undo(); break;
                case 5: s.redo(); break;
                default: s.apply_brush({static_cast<int>(rng() % 6), kBrushSizes[rng() % 4], cell}); break;
            }
        } catch (const EditorError&) {
        }
    }
    Session replay("s", 17, initial, {}, 0);
    for (const auto& e : s.events()) replay.apply_event(e);
    CHECK(replay.level() == s.level());
    CHECK(replay.suggestions() == s.suggestions());
    CHECK(replay.events() == s.events());
    CHECK(replay.refreshes_used() == s.refreshes_used());
    CHECK(replay.wand_tiles_used() == s.wand_tiles_used());
    CHECK(replay.undo_depth() == s.undo_depth());
}

TEST_CASE("originality score") {
    Level level;
    CHECK(originality_from_reconstruction(level, level) == 0.0);
    Level recon = level;
    for (int i = 0; i < 176; ++i) recon.set(i % kLevelWidth, i / kLevelWidth, TileKind::Solid);
    CHECK(originality_from_reconstruction(level, recon) == 25.0);
    Level all_solid(kLevelWidth, kLevelHeight, TileKind::Solid);
    CHECK(originality_from_reconstruction(level, all_solid) == 100.0);
}
