#pragma once

#include "lode/journal.hpp"

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lode::analytics {

/// Indexed [model row][variance column], matching the suggestion grid.
using GridCounts = std::array<std::array<long, 2>, 3>;

struct OriginalityEntry {
    std::string session;
    double score = 0.0;
};

struct Snapshot {
    long sessions = 0;
    /// BrushApply events per suggestion cell.
    GridCounts interactions{};
    /// SelectSuggestion events per suggestion cell.
    GridCounts selections{};
    /// refreshes used at the end of each session -> number of sessions.
    std::map<int, long> refresh_histogram;
    /// Last won level of each session, in journal order.
    std::vector<OriginalityEntry> originality;
    long playable_levels = 0;
    /// Per tile kind, 22 x 32 row-major counts over the playable levels.
    std::array<std::vector<long>, kTileKinds> tile_heatmaps;
    std::vector<long> spawn_heatmap;

    Snapshot();
};

/// Aggregates journal records. A session's playable level is its last Win event; a session's
/// refresh count is the budget consumed since its last ClearAll.
Snapshot compute(std::span<const journal::Record> records);

inline constexpr std::array<std::string_view, 4> kSliceNames = {"suggestions", "refreshes", "originality", "heatmaps"};
/// Throws std::out_of_range for unknown slice names.
codec::json slice_to_json(const Snapshot& snapshot, std::string_view slice);

}  // namespace lode::analytics
