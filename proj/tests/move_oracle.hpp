#pragma once

// Tick-based reference interpreter for player movement, written independently of MoveGraph.

#include "lode/level.hpp"

#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

enum class Action { Left, Right, Up, Down, Idle };
inline constexpr Action kActions[] = {Action::Left, Action::Right, Action::Up, Action::Down, Action::Idle};

inline bool open(const lode::Level& lv, int c, int r) {
    if (c < 0 || r < 0 || c >= lv.width() || r >= lv.height()) return false;
    const auto t = lv.at(c, r);
    return t != lode::TileKind::Solid && t != lode::TileKind::Breakable;
}

inline bool holds(const lode::Level& lv, int c, int r) {
    const auto here = lv.at(c, r);
    if (here == lode::TileKind::Ladder || here == lode::TileKind::Rope) return true;
    if (r == lv.height() - 1) return true;
    const auto below = lv.at(c, r + 1);
    return below == lode::TileKind::Solid || below == lode::TileKind::Breakable || below == lode::TileKind::Ladder;
}

/// Position after one tick, or nothing if the action does not move the player.
inline std::optional<lode::Cell> step(const lode::Level& lv, lode::Cell p, Action a) {
    if (!holds(lv, p.col, p.row)) {
        // gravity wins over any input
        if (open(lv, p.col, p.row + 1)) return lode::Cell{p.col, p.row + 1};
        return std::nullopt;
    }
    const auto here = lv.at(p.col, p.row);
    switch (a) {
        case Action::Left:
            if (open(lv, p.col - 1, p.row)) return lode::Cell{p.col - 1, p.row};
            break;
        case Action::Right:
            if (open(lv, p.col + 1, p.row)) return lode::Cell{p.col + 1, p.row};
            break;
        case Action::Up:
            if (here == lode::TileKind::Ladder && open(lv, p.col, p.row - 1)) return lode::Cell{p.col, p.row - 1};
            break;
        case Action::Down: {
            const bool on_ladder = p.row + 1 < lv.height() && lv.at(p.col, p.row + 1) == lode::TileKind::Ladder;
            const bool can = here == lode::TileKind::Ladder || here == lode::TileKind::Rope || on_ladder;
            if (can && open(lv, p.col, p.row + 1)) return lode::Cell{p.col, p.row + 1};
            break;
        }
        case Action::Idle:
            break;
    }
    return std::nullopt;
}

inline std::set<std::pair<int, int>> moves_from(const lode::Level& lv, lode::Cell p) {
    std::set<std::pair<int, int>> out;
    if (!open(lv, p.col, p.row)) return out;
    for (const auto a : kActions)
        if (const auto q = step(lv, p, a)) out.insert({q->col, q->row});
    return out;
}

/// Reachable flags (row-major) by fixed-point sweeps, no queue.
inline std::vector<char> reachable(const lode::Level& lv) {
    std::vector<char> seen(static_cast<std::size_t>(lv.width() * lv.height()), 0);
    if (!lv.spawn()) return seen;
    seen[static_cast<std::size_t>(lv.spawn()->row * lv.width() + lv.spawn()->col)] = 1;
    for (bool grew = true; grew;) {
        grew = false;
        for (int r = 0; r < lv.height(); ++r)
            for (int c = 0; c < lv.width(); ++c) {
                if (!seen[static_cast<std::size_t>(r * lv.width() + c)]) continue;
                for (const auto& [qc, qr] : moves_from(lv, {c, r})) {
                    auto& f = seen[static_cast<std::size_t>(qr * lv.width() + qc)];
                    if (!f) f = 1, grew = true;
                }
            }
    }
    return seen;
}

/// Random level with a spawn on an open cell. Tile weights favour Empty so paths exist.
inline lode::Level random_level(std::mt19937_64& rng, int w, int h) {
    static constexpr int kWeights[lode::kTileKinds] = {3, 1, 2, 2, 2, 1, 6};
    std::discrete_distribution<int> tile(std::begin(kWeights), std::end(kWeights));
    lode::Level lv(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) lv.set(c, r, static_cast<lode::TileKind>(tile(rng)));
    std::vector<lode::Cell> opens;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (open(lv, c, r)) opens.push_back({c, r});
    if (!opens.empty() && rng() % 10 != 0) lv.set_spawn(opens[rng() % opens.size()]);
    return lv;
}

}  // namespace oracle
