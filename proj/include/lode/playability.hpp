#pragma once

#include "lode/level.hpp"

#include <string_view>
#include <vector>

namespace lode {

/// Directed movement graph over the cells a player can occupy. Rules (no jumping, no digging,
/// enemies ignored):
///   - a cell is supported if it is a Ladder or Rope, sits on the bottom row, or the cell below is
///     Solid, Breakable or Ladder;
///   - supported cells walk left/right into non-blocking neighbours;
///   - Ladder cells climb up into a non-blocking cell above;
///   - Ladder and Rope cells, and cells standing on a Ladder, move down into a non-blocking cell below;
///   - unsupported cells only fall one cell down.
/// A fall is a chain of single-cell edges, so every cell crossed on the way down is a node.
class MoveGraph {
public:
    explicit MoveGraph(const Level& level);

    int width() const { return width_; }
    int height() const { return height_; }
    bool occupiable(Cell c) const;
    bool supported(Cell c) const;
    /// Successors of `c`, in the order left, right, up, down. Empty for blocking cells.
    const std::vector<Cell>& successors(Cell c) const { return adjacency_[index(c)]; }
    std::size_t edge_count() const;

private:
    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row * width_ + c.col); }

    int width_;
    int height_;
    std::vector<char> occupiable_;
    std::vector<char> supported_;
    std::vector<std::vector<Cell>> adjacency_;
};

MoveGraph build_move_graph(const Level& level);

inline constexpr std::string_view kReachabilityNote =
    "no-dig approximation: levels that need hole digging may be reported unplayable";

struct PlayabilityReport {
    bool playable = false;
    bool has_spawn = false;
    int reachable_gold = 0;
    int total_gold = 0;
    /// Gold cells not reachable from the spawn, row-major order.
    std::vector<Cell> unreachable_cells;
    /// Row-major, one flag per cell; all false without a spawn.
    std::vector<char> reachable;
    std::string_view note = kReachabilityNote;

    friend bool operator==(const PlayabilityReport&, const PlayabilityReport&) = default;
};

/// Breadth-first search from the spawn over the move graph. Playable iff a spawn exists, the level
/// holds at least one gold, and every gold cell is reached.
PlayabilityReport check_playability(const Level& level);

}  // namespace lode
