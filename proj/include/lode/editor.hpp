#pragma once

#include "lode/level.hpp"
#include "lode/suggest.hpp"
#include "lode/vae.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lode::editor {

inline constexpr int kMaxRefreshes = 7;
inline constexpr int kMaxWandTiles = 7;
inline constexpr std::array<int, 4> kBrushSizes = {1, 2, 3, 5};

constexpr bool valid_brush_size(int size) {
    for (const int s : kBrushSizes) {
        if (s == size) return true;
    }
    return false;
}

enum class EventKind {
    BrushApply,
    Erase,
    Wand,
    PlaceSpawn,
    Refresh,
    Undo,
    Redo,
    ClearAll,
    Play,
    Win,
    Share,
    SelectSuggestion,
};

std::string_view event_kind_name(EventKind kind);
std::optional<EventKind> event_kind_from_name(std::string_view name);
/// Play, Win, Share, SelectSuggestion: reported by the client rather than produced by an edit.
bool is_telemetry(EventKind kind);

struct TileChange {
    Cell cell;
    TileKind tile = TileKind::Empty;
    friend bool operator==(const TileChange&, const TileChange&) = default;
};

/// One entry of the session event log. Which optional fields are present depends on `kind`:
///   BrushApply        suggestion_id, size, cell (anchor), changes
///   Erase             size, cell (anchor), changes
///   Wand              cell, changes (the single written tile)
///   PlaceSpawn        cell
///   Refresh, ClearAll suggestions
///   SelectSuggestion  suggestion_id
///   Win               level_token, score
///   Undo, Redo, Play, Share  nothing
struct EditEvent {
    EventKind kind = EventKind::Play;
    std::int64_t timestamp_ms = 0;
    std::optional<int> suggestion_id;
    std::optional<int> size;
    std::optional<Cell> cell;
    std::vector<TileChange> changes;
    std::optional<suggest::SuggestionSet> suggestions;
    std::optional<std::string> level_token;
    std::optional<double> score;

    friend bool operator==(const EditEvent&, const EditEvent&) = default;
};

/// Empty when the payload matches the kind; otherwise a description of the first problem.
std::optional<std::string> validate_event(const EditEvent& event);

struct BrushStroke {
    int suggestion_id = 0;
    int size = 1;
    Cell anchor;
};

class EditorError : public std::runtime_error {
public:
    enum class Code {
        InvalidSuggestion,
        InvalidBrushSize,
        EmptyFootprint,
        OutOfBounds,
        InvalidPlacement,
        BudgetExhausted,
        InvalidEvent,
    };
    EditorError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

std::string_view error_code_name(EditorError::Code code);

struct Budgets {
    int max_refreshes = kMaxRefreshes;
    int max_wand_tiles = kMaxWandTiles;
};

/// Produces the suggestion grid for a level. Deterministic in (level, seed).
using SuggestionGenerator =
    std::function<suggest::SuggestionSet(const Level& current, std::uint64_t seed, int generation)>;

std::int64_t unix_millis();

/// Cells covered by a size x size square whose top-left corner is `anchor`, clipped to the level.
std::vector<Cell> footprint(const Level& level, Cell anchor, int size);

/// Most common tile among the 8 neighbours, out-of-bounds neighbours counting as Solid. Ties go to
/// the lower tile index (Solid > Breakable > Ladder > Rope > Gold > Enemy > Empty).
TileKind wand_majority(const Level& level, Cell cell);

/// Authoritative editing state. Tiles enter the level only by brush copies from the current
/// suggestions, the wand, or the eraser. Not thread-safe; callers serialize access per session.
class Session {
public:
    /// Fresh session: empty level, initial suggestions generated from it.
    Session(std::string id, std::uint64_t seed, const SuggestionGenerator& generator, Budgets budgets = {},
            std::int64_t created_at_ms = unix_millis());
    /// Session with a known initial suggestion set (journal replay).
    Session(std::string id, std::uint64_t seed, suggest::SuggestionSet initial, Budgets budgets,
            std::int64_t created_at_ms);

    const std::string& id() const { return id_; }
    std::uint64_t seed() const { return seed_; }
    std::int64_t created_at_ms() const { return created_at_; }
    const Level& level() const { return level_; }
    const suggest::SuggestionSet& suggestions() const { return suggestions_; }
    const Budgets& budgets() const { return budgets_; }
    int refreshes_used() const { return refreshes_used_; }
    int wand_tiles_used() const { return wand_used_; }
    int refreshes_remaining() const { return budgets_.max_refreshes - refreshes_used_; }
    int wand_tiles_remaining() const { return budgets_.max_wand_tiles - wand_used_; }
    std::size_t undo_depth() const { return undo_.size(); }
    std::size_t redo_depth() const { return redo_.size(); }
    const std::vector<EditEvent>& events() const { return events_; }
    /// Seed used for the suggestion set of the given generation.
    std::uint64_t generation_seed(int generation) const;
    int next_generation() const { return generation_ + 1; }

    const EditEvent& apply_brush(const BrushStroke& stroke, std::int64_t at_ms = unix_millis());
    const EditEvent& apply_eraser(int size, Cell anchor, std::int64_t at_ms = unix_millis());
    const EditEvent& apply_wand(Cell cell, std::int64_t at_ms = unix_millis());
    const EditEvent& place_spawn(Cell cell, std::int64_t at_ms = unix_millis());
    /// Not undoable; consumes one refresh.
    const EditEvent& refresh(const SuggestionGenerator& generator, std::int64_t at_ms = unix_millis());
    /// Returns false (and logs nothing) when there is nothing to undo. Budgets are not restored.
    bool undo(std::int64_t at_ms = unix_millis());
    bool redo(std::int64_t at_ms = unix_millis());
    const EditEvent& clear_all(const SuggestionGenerator& generator, std::int64_t at_ms = unix_millis());
    /// Appends a Play/Win/Share/SelectSuggestion event after validating it.
    const EditEvent& record(EditEvent telemetry);

    /// Re-applies an event taken from a session log, reproducing the state it produced.
    void apply_event(const EditEvent& event);

private:
    const EditEvent& log(EditEvent event);
    void commit(Level next);
    const EditEvent& install_refresh(suggest::SuggestionSet set, std::int64_t at_ms);
    const EditEvent& install_clear(suggest::SuggestionSet set, std::int64_t at_ms);
    const EditEvent& write_cells(EventKind kind, std::vector<Cell> cells, const std::function<TileKind(Cell)>& tile_for,
                                 EditEvent event);

    std::string id_;
    std::uint64_t seed_;
    std::int64_t created_at_;
    Budgets budgets_;
    Level level_;
    suggest::SuggestionSet suggestions_;
    int generation_ = 0;
    int refreshes_used_ = 0;
    int wand_used_ = 0;
    std::vector<Level> undo_;
    std::vector<Level> redo_;
    std::vector<EditEvent> events_;
};

/// 100 * hamming(level, reconstruction) / area; spawn ignored.
double originality_from_reconstruction(const Level& level, const Level& reconstruction);
/// Originality of a level against the VAE-All model.
double originality_score(const Level& level, const vae::VaeModel& vae_all);

/// Generator backed by the three themed models.
SuggestionGenerator model_generator(suggest::ModelSet models, suggest::SuggestionConfig config = {});

}  // namespace lode::editor
