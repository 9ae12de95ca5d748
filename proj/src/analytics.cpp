#include "lode/analytics.hpp"

#include "lode/share.hpp"

#include <stdexcept>
#include <unordered_map>

namespace lode::analytics {

namespace {

struct SessionTally {
    std::size_t order = 0;
    int refreshes = 0;
    std::optional<editor::EditEvent> last_win;
};

void bump(GridCounts& counts, int id) {
    ++counts[static_cast<std::size_t>(id / 2)][static_cast<std::size_t>(id % 2)];
}

codec::json grid_json(const GridCounts& counts) {
    codec::json out = codec::json::array();
    for (int id = 0; id < suggest::kSuggestionCount; ++id) {
        out.push_back({{"id", id},
                       {"model", suggest::role_name(suggest::role_of(id))},
                       {"variance", suggest::variance_name(suggest::variance_of(id))},
                       {"count", counts[static_cast<std::size_t>(id / 2)][static_cast<std::size_t>(id % 2)]}});
    }
    return out;
}

codec::json heatmap_json(const std::vector<long>& cells) {
    codec::json rows = codec::json::array();
    for (int r = 0; r < kLevelHeight; ++r) {
        rows.push_back(std::vector<long>(cells.begin() + r * kLevelWidth, cells.begin() + (r + 1) * kLevelWidth));
    }
    return rows;
}

}  // namespace

Snapshot::Snapshot() : spawn_heatmap(kLevelArea, 0) {
    for (auto& h : tile_heatmaps) h.assign(kLevelArea, 0);
}

Snapshot compute(std::span<const journal::Record> records) {
    Snapshot snap;
    std::unordered_map<std::string, SessionTally> sessions;
    std::vector<const std::string*> order;
    for (const auto& r : records) {
        if (r.type == journal::Record::Type::Create) {
            auto [it, inserted] = sessions.try_emplace(r.session);
            if (inserted) {
                it->second.order = order.size();
                order.push_back(&it->first);
            }
            continue;
        }
        if (r.type != journal::Record::Type::Event) continue;
        const auto it = sessions.find(r.session);
        if (it == sessions.end()) continue;
        auto& tally = it->second;
        const auto& e = *r.event;
        switch (e.kind) {
            case editor::EventKind::BrushApply: bump(snap.interactions, *e.suggestion_id); break;
            case editor::EventKind::SelectSuggestion: bump(snap.selections, *e.suggestion_id); break;
            case editor::EventKind::Refresh: ++tally.refreshes; break;
            case editor::EventKind::ClearAll: tally.refreshes = 0; break;
            case editor::EventKind::Win: tally.last_win = e; break;
            default: break;
        }
    }
    snap.sessions = static_cast<long>(order.size());
    for (const auto* id : order) {
        const auto& tally = sessions.at(*id);
        ++snap.refresh_histogram[tally.refreshes];
        if (!tally.last_win) continue;
        snap.originality.push_back({*id, *tally.last_win->score});
        ++snap.playable_levels;
        const Level level = decode_share_token(*tally.last_win->level_token);
        for (int i = 0; i < kLevelArea; ++i) {
            ++snap.tile_heatmaps[static_cast<std::size_t>(tile_index(level.at(i % kLevelWidth, i / kLevelWidth)))]
                                [static_cast<std::size_t>(i)];
        }
        if (level.spawn()) ++snap.spawn_heatmap[static_cast<std::size_t>(level.spawn()->row * kLevelWidth + level.spawn()->col)];
    }
    return snap;
}

codec::json slice_to_json(const Snapshot& s, std::string_view slice) {
    if (slice == "suggestions") {
        return {{"sessions", s.sessions}, {"interactions", grid_json(s.interactions)}, {"selections", grid_json(s.selections)}};
    }
    if (slice == "refreshes") {
        codec::json bins = codec::json::array();
        for (const auto& [refreshes, count] : s.refresh_histogram) bins.push_back({{"refreshes", refreshes}, {"sessions", count}});
        return {{"sessions", s.sessions}, {"histogram", bins}};
    }
    if (slice == "originality") {
        codec::json scores = codec::json::array();
        for (const auto& e : s.originality) scores.push_back({{"session", e.session}, {"score", e.score}});
        return {{"levels", s.playable_levels}, {"scores", scores}};
    }
    if (slice == "heatmaps") {
        codec::json tiles = codec::json::object();
        for (const auto t : kAllTiles) tiles[std::string(tile_name(t))] = heatmap_json(s.tile_heatmaps[tile_index(t)]);
        return {{"levels", s.playable_levels}, {"tiles", tiles}, {"spawn", heatmap_json(s.spawn_heatmap)}};
    }
    throw std::out_of_range("unknown analytics slice '" + std::string(slice) + "'");
}

}  // namespace lode::analytics
