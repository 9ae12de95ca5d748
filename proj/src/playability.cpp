#include "lode/playability.hpp"

#include <deque>

namespace lode {

namespace {

bool gives_footing(TileKind t) { return is_blocking(t) || t == TileKind::Ladder; }

}  // namespace

MoveGraph::MoveGraph(const Level& level)
    : width_(level.width()),
      height_(level.height()),
      occupiable_(static_cast<std::size_t>(level.area()), 0),
      supported_(static_cast<std::size_t>(level.area()), 0),
      adjacency_(static_cast<std::size_t>(level.area())) {
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            const Cell cell{c, r};
            const TileKind t = level.at(cell);
            occupiable_[index(cell)] = !is_blocking(t);
            const bool bottom = r + 1 == height_;
            supported_[index(cell)] = t == TileKind::Ladder || t == TileKind::Rope || bottom ||
                                      gives_footing(level.at(c, r + 1));
        }
    }
    auto open = [&](Cell n) { return level.in_bounds(n) && occupiable_[index(n)]; };
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            const Cell cell{c, r};
            if (!occupiable_[index(cell)]) continue;
            auto& out = adjacency_[index(cell)];
            const Cell left{c - 1, r}, right{c + 1, r}, up{c, r - 1}, down{c, r + 1};
            if (!supported_[index(cell)]) {
                out.push_back(down);  // unsupported implies the cell below exists and is open
                continue;
            }
            const TileKind t = level.at(cell);
            if (open(left)) out.push_back(left);
            if (open(right)) out.push_back(right);
            if (t == TileKind::Ladder && open(up)) out.push_back(up);
            const bool can_descend =
                t == TileKind::Ladder || t == TileKind::Rope || (level.in_bounds(down) && level.at(down) == TileKind::Ladder);
            if (can_descend && open(down)) out.push_back(down);
        }
    }
}

bool MoveGraph::occupiable(Cell c) const {
    return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_ && occupiable_[index(c)];
}

bool MoveGraph::supported(Cell c) const { return occupiable(c) && supported_[index(c)]; }

std::size_t MoveGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& a : adjacency_) n += a.size();
    return n;
}

MoveGraph build_move_graph(const Level& level) { return MoveGraph(level); }

PlayabilityReport check_playability(const Level& level) {
    PlayabilityReport report;
    report.reachable.assign(static_cast<std::size_t>(level.area()), 0);
    report.has_spawn = level.spawn().has_value();
    if (report.has_spawn) {
        const MoveGraph graph(level);
        std::deque<Cell> queue{*level.spawn()};
        auto idx = [&](Cell c) { return static_cast<std::size_t>(c.row * level.width() + c.col); };
        report.reachable[idx(*level.spawn())] = 1;
        while (!queue.empty()) {
            const Cell c = queue.front();
            queue.pop_front();
            for (const Cell n : graph.successors(c)) {
                if (!report.reachable[idx(n)]) {
                    report.reachable[idx(n)] = 1;
                    queue.push_back(n);
                }
            }
        }
    }
    for (int r = 0; r < level.height(); ++r) {
        for (int c = 0; c < level.width(); ++c) {
            if (level.at(c, r) != TileKind::Gold) continue;
            ++report.total_gold;
            if (report.reachable[static_cast<std::size_t>(r * level.width() + c)]) {
                ++report.reachable_gold;
            } else {
                report.unreachable_cells.push_back({c, r});
            }
        }
    }
    report.playable = report.has_spawn && report.total_gold > 0 && report.reachable_gold == report.total_gold;
    return report;
}

}  // namespace lode
