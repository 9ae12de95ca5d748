#include "lode/editor.hpp"

#include "lode/share.hpp"

#include <algorithm>

namespace lode::editor {

namespace {

constexpr std::array<std::string_view, 12> kEventNames = {
    "BrushApply", "Erase", "Wand", "PlaceSpawn", "Refresh", "Undo",
    "Redo",       "ClearAll", "Play", "Win",     "Share",   "SelectSuggestion",
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

EditEvent make_event(EventKind kind, std::int64_t at_ms) {
    EditEvent e;
    e.kind = kind;
    e.timestamp_ms = at_ms;
    return e;
}

void check_set(const suggest::SuggestionSet& set) {
    if (set.items.size() != suggest::kSuggestionCount) {
        throw EditorError(EditorError::Code::InvalidEvent, "suggestion set must hold 6 suggestions");
    }
    for (int id = 0; id < suggest::kSuggestionCount; ++id) {
        const auto& s = set.items[static_cast<std::size_t>(id)];
        if (s.id != id || suggest::suggestion_id(s.source, s.variance) != id || !s.level.is_standard_size()) {
            throw EditorError(EditorError::Code::InvalidEvent, "suggestion set is not in grid order");
        }
    }
}

}  // namespace

std::string_view event_kind_name(EventKind kind) { return kEventNames[static_cast<std::size_t>(kind)]; }

std::optional<EventKind> event_kind_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kEventNames.size(); ++i) {
        if (kEventNames[i] == name) return static_cast<EventKind>(i);
    }
    return std::nullopt;
}

bool is_telemetry(EventKind kind) {
    return kind == EventKind::Play || kind == EventKind::Win || kind == EventKind::Share ||
           kind == EventKind::SelectSuggestion;
}

std::optional<std::string> validate_event(const EditEvent& e) {
    const bool wants_suggestion_id = e.kind == EventKind::BrushApply || e.kind == EventKind::SelectSuggestion;
    const bool wants_size = e.kind == EventKind::BrushApply || e.kind == EventKind::Erase;
    const bool wants_cell = e.kind == EventKind::BrushApply || e.kind == EventKind::Erase || e.kind == EventKind::Wand ||
                            e.kind == EventKind::PlaceSpawn;
    const bool allows_changes = e.kind == EventKind::BrushApply || e.kind == EventKind::Erase || e.kind == EventKind::Wand;
    const bool wants_set = e.kind == EventKind::Refresh || e.kind == EventKind::ClearAll;
    const bool wants_win = e.kind == EventKind::Win;
    const std::string name(event_kind_name(e.kind));
    auto field = [&](bool present, bool wanted, const char* what) -> std::optional<std::string> {
        if (present && !wanted) return name + " must not carry " + what;
        if (!present && wanted) return name + " requires " + what;
        return std::nullopt;
    };
    if (auto p = field(e.suggestion_id.has_value(), wants_suggestion_id, "suggestion")) return p;
    if (auto p = field(e.size.has_value(), wants_size, "size")) return p;
    if (auto p = field(e.cell.has_value(), wants_cell, "cell")) return p;
    if (!e.changes.empty() && !allows_changes) return name + " must not carry changes";
    if (auto p = field(e.suggestions.has_value(), wants_set, "suggestions")) return p;
    if (auto p = field(e.level_token.has_value(), wants_win, "level")) return p;
    if (auto p = field(e.score.has_value(), wants_win, "score")) return p;
    if (e.suggestion_id && !suggest::valid_suggestion_id(*e.suggestion_id)) {
        return "suggestion id " + std::to_string(*e.suggestion_id) + " out of range 0..5";
    }
    if (e.size && !valid_brush_size(*e.size)) return "brush size " + std::to_string(*e.size) + " not in {1,2,3,5}";
    return std::nullopt;
}

std::string_view error_code_name(EditorError::Code code) {
    switch (code) {
        case EditorError::Code::InvalidSuggestion: return "invalid_suggestion";
        case EditorError::Code::InvalidBrushSize: return "invalid_brush_size";
        case EditorError::Code::EmptyFootprint: return "empty_footprint";
        case EditorError::Code::OutOfBounds: return "out_of_bounds";
        case EditorError::Code::InvalidPlacement: return "invalid_placement";
        case EditorError::Code::BudgetExhausted: return "budget_exhausted";
        case EditorError::Code::InvalidEvent: return "invalid_event";
    }
    return "unknown";
}

std::int64_t unix_millis() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::vector<Cell> footprint(const Level& level, Cell anchor, int size) {
    std::vector<Cell> cells;
    for (int r = anchor.row; r < anchor.row + size; ++r) {
        for (int c = anchor.col; c < anchor.col + size; ++c) {
            if (level.in_bounds({c, r})) cells.push_back({c, r});
        }
    }
    return cells;
}

TileKind wand_majority(const Level& level, Cell cell) {
    std::array<int, kTileKinds> votes{};
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const Cell n{cell.col + dc, cell.row + dr};
            ++votes[tile_index(level.in_bounds(n) ? level.at(n) : TileKind::Solid)];
        }
    }
    // max_element returns the first maximum, i.e. the lowest index wins ties.
    return static_cast<TileKind>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

// ---------------------------------------------------------------------------

Session::Session(std::string id, std::uint64_t seed, const SuggestionGenerator& generator, Budgets budgets,
                 std::int64_t created_at_ms)
    : id_(std::move(id)), seed_(seed), created_at_(created_at_ms), budgets_(budgets) {
    suggestions_ = generator(level_, generation_seed(0), 0);
    check_set(suggestions_);
}

Session::Session(std::string id, std::uint64_t seed, suggest::SuggestionSet initial, Budgets budgets,
                 std::int64_t created_at_ms)
    : id_(std::move(id)), seed_(seed), created_at_(created_at_ms), budgets_(budgets), suggestions_(std::move(initial)) {
    check_set(suggestions_);
    generation_ = suggestions_.generation;
}

std::uint64_t Session::generation_seed(int generation) const {
    return splitmix64(seed_ ^ splitmix64(static_cast<std::uint64_t>(generation)));
}

const EditEvent& Session::log(EditEvent event) {
    events_.push_back(std::move(event));
    return events_.back();
}

void Session::commit(Level next) {
    if (next == level_) return;
    undo_.push_back(std::move(level_));
    redo_.clear();
    level_ = std::move(next);
}

const EditEvent& Session::write_cells(EventKind kind, std::vector<Cell> cells,
                                      const std::function<TileKind(Cell)>& tile_for, EditEvent event) {
    Level next = level_;
    for (const auto& c : cells) {
        const TileKind t = tile_for(c);
        next.set(c, t);
        event.changes.push_back({c, t});
    }
    if (next.spawn()) {
        const Cell s = *next.spawn();
        const bool covered = std::find(cells.begin(), cells.end(), s) != cells.end();
        // Erasing over the spawn removes it; any write that blocks the spawn cell removes it too.
        if ((kind == EventKind::Erase && covered) || is_blocking(next.at(s))) next.set_spawn(std::nullopt);
    }
    commit(std::move(next));
    return log(std::move(event));
}

const EditEvent& Session::apply_brush(const BrushStroke& stroke, std::int64_t at_ms) {
    if (!suggest::valid_suggestion_id(stroke.suggestion_id)) {
        throw EditorError(EditorError::Code::InvalidSuggestion,
                          "suggestion id " + std::to_string(stroke.suggestion_id) + " out of range 0..5");
    }
    if (!valid_brush_size(stroke.size)) {
        throw EditorError(EditorError::Code::InvalidBrushSize, "brush size " + std::to_string(stroke.size) + " not in {1,2,3,5}");
    }
    auto cells = footprint(level_, stroke.anchor, stroke.size);
    if (cells.empty()) throw EditorError(EditorError::Code::EmptyFootprint, "brush footprint lies outside the level");
    const Level& source = suggestions_.at(stroke.suggestion_id).level;
    EditEvent e = make_event(EventKind::BrushApply, at_ms);
    e.suggestion_id = stroke.suggestion_id;
    e.size = stroke.size;
    e.cell = stroke.anchor;
    return write_cells(EventKind::BrushApply, std::move(cells), [&](Cell c) { return source.at(c); }, std::move(e));
}

const EditEvent& Session::apply_eraser(int size, Cell anchor, std::int64_t at_ms) {
    if (!valid_brush_size(size)) {
        throw EditorError(EditorError::Code::InvalidBrushSize, "eraser size " + std::to_string(size) + " not in {1,2,3,5}");
    }
    auto cells = footprint(level_, anchor, size);
    if (cells.empty()) throw EditorError(EditorError::Code::EmptyFootprint, "eraser footprint lies outside the level");
    EditEvent e = make_event(EventKind::Erase, at_ms);
    e.size = size;
    e.cell = anchor;
    return write_cells(EventKind::Erase, std::move(cells), [](Cell) { return TileKind::Empty; }, std::move(e));
}

const EditEvent& Session::apply_wand(Cell cell, std::int64_t at_ms) {
    if (!level_.in_bounds(cell)) throw EditorError(EditorError::Code::OutOfBounds, "wand target out of bounds");
    if (wand_used_ >= budgets_.max_wand_tiles) {
        throw EditorError(EditorError::Code::BudgetExhausted,
                          "wand budget of " + std::to_string(budgets_.max_wand_tiles) + " tiles exhausted");
    }
    ++wand_used_;
    const TileKind tile = wand_majority(level_, cell);
    EditEvent e = make_event(EventKind::Wand, at_ms);
    e.cell = cell;
    return write_cells(EventKind::Wand, {cell}, [&](Cell) { return tile; }, std::move(e));
}

const EditEvent& Session::place_spawn(Cell cell, std::int64_t at_ms) {
    if (!level_.in_bounds(cell)) throw EditorError(EditorError::Code::OutOfBounds, "spawn out of bounds");
    if (is_blocking(level_.at(cell))) {
        throw EditorError(EditorError::Code::InvalidPlacement,
                          "cannot place the player on a " + std::string(tile_name(level_.at(cell))) + " tile");
    }
    Level next = level_;
    next.set_spawn(cell);
    commit(std::move(next));
    EditEvent e = make_event(EventKind::PlaceSpawn, at_ms);
    e.cell = cell;
    return log(std::move(e));
}

const EditEvent& Session::install_refresh(suggest::SuggestionSet set, std::int64_t at_ms) {
    if (refreshes_used_ >= budgets_.max_refreshes) {
        throw EditorError(EditorError::Code::BudgetExhausted,
                          "refresh budget of " + std::to_string(budgets_.max_refreshes) + " exhausted");
    }
    check_set(set);
    ++refreshes_used_;
    generation_ = set.generation;
    suggestions_ = set;
    EditEvent e = make_event(EventKind::Refresh, at_ms);
    e.suggestions = std::move(set);
    return log(std::move(e));
}

const EditEvent& Session::refresh(const SuggestionGenerator& generator, std::int64_t at_ms) {
    if (refreshes_used_ >= budgets_.max_refreshes) {
        throw EditorError(EditorError::Code::BudgetExhausted,
                          "refresh budget of " + std::to_string(budgets_.max_refreshes) + " exhausted");
    }
    const int generation = generation_ + 1;
    return install_refresh(generator(level_.without_spawn(), generation_seed(generation), generation), at_ms);
}

bool Session::undo(std::int64_t at_ms) {
    if (undo_.empty()) return false;
    redo_.push_back(std::move(level_));
    level_ = std::move(undo_.back());
    undo_.pop_back();
    log(make_event(EventKind::Undo, at_ms));
    return true;
}

bool Session::redo(std::int64_t at_ms) {
    if (redo_.empty()) return false;
    undo_.push_back(std::move(level_));
    level_ = std::move(redo_.back());
    redo_.pop_back();
    log(make_event(EventKind::Redo, at_ms));
    return true;
}

const EditEvent& Session::install_clear(suggest::SuggestionSet set, std::int64_t at_ms) {
    check_set(set);
    level_ = Level();
    undo_.clear();
    redo_.clear();
    refreshes_used_ = 0;
    wand_used_ = 0;
    generation_ = set.generation;
    suggestions_ = set;
    EditEvent e = make_event(EventKind::ClearAll, at_ms);
    e.suggestions = std::move(set);
    return log(std::move(e));
}

const EditEvent& Session::clear_all(const SuggestionGenerator& generator, std::int64_t at_ms) {
    const int generation = generation_ + 1;
    return install_clear(generator(Level(), generation_seed(generation), generation), at_ms);
}

const EditEvent& Session::record(EditEvent telemetry) {
    if (!is_telemetry(telemetry.kind)) {
        throw EditorError(EditorError::Code::InvalidEvent,
                          std::string(event_kind_name(telemetry.kind)) + " events come from edits, not telemetry");
    }
    if (auto problem = validate_event(telemetry)) throw EditorError(EditorError::Code::InvalidEvent, *problem);
    return log(std::move(telemetry));
}

void Session::apply_event(const EditEvent& e) {
    if (auto problem = validate_event(e)) throw EditorError(EditorError::Code::InvalidEvent, *problem);
    switch (e.kind) {
        case EventKind::BrushApply: apply_brush({*e.suggestion_id, *e.size, *e.cell}, e.timestamp_ms); break;
        case EventKind::Erase: apply_eraser(*e.size, *e.cell, e.timestamp_ms); break;
        case EventKind::Wand: apply_wand(*e.cell, e.timestamp_ms); break;
        case EventKind::PlaceSpawn: place_spawn(*e.cell, e.timestamp_ms); break;
        case EventKind::Refresh: install_refresh(*e.suggestions, e.timestamp_ms); break;
        case EventKind::ClearAll: install_clear(*e.suggestions, e.timestamp_ms); break;
        case EventKind::Undo:
            if (!undo(e.timestamp_ms)) throw EditorError(EditorError::Code::InvalidEvent, "logged undo with empty stack");
            break;
        case EventKind::Redo:
            if (!redo(e.timestamp_ms)) throw EditorError(EditorError::Code::InvalidEvent, "logged redo with empty stack");
            break;
        default: record(e); break;
    }
}

// ---------------------------------------------------------------------------

double originality_from_reconstruction(const Level& level, const Level& reconstruction) {
    return 100.0 * static_cast<double>(hamming_distance(level, reconstruction)) / static_cast<double>(level.area());
}

double originality_score(const Level& level, const vae::VaeModel& vae_all) {
    return originality_from_reconstruction(level, vae::reconstruct(vae_all, level.without_spawn()));
}

SuggestionGenerator model_generator(suggest::ModelSet models, suggest::SuggestionConfig config) {
    return [models = std::move(models), config](const Level& current, std::uint64_t seed, int generation) {
        return suggest::generate_set(models, current, seed, generation, config);
    };
}

}  // namespace lode::editor
