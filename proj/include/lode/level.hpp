#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lode {

enum class TileKind : std::uint8_t {
    Solid = 0,
    Breakable = 1,
    Ladder = 2,
    Rope = 3,
    Gold = 4,
    Enemy = 5,
    Empty = 6,
};

inline constexpr int kTileKinds = 7;
inline constexpr std::array<TileKind, kTileKinds> kAllTiles = {
    TileKind::Solid, TileKind::Breakable, TileKind::Ladder, TileKind::Rope,
    TileKind::Gold,  TileKind::Enemy,     TileKind::Empty,
};

constexpr int tile_index(TileKind t) { return static_cast<int>(t); }
TileKind tile_from_index(int index);
std::string_view tile_name(TileKind t);
std::optional<TileKind> tile_from_name(std::string_view name);

/// The player cannot occupy Solid or Breakable cells.
constexpr bool is_blocking(TileKind t) { return t == TileKind::Solid || t == TileKind::Breakable; }

struct Cell {
    int col = 0;
    int row = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline constexpr int kLevelWidth = 32;
inline constexpr int kLevelHeight = 22;
inline constexpr int kLevelArea = kLevelWidth * kLevelHeight;

class LevelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Tile grid plus optional player spawn. Editor levels are 32x22; other sizes exist for
/// small reachability experiments.
class Level {
public:
    Level() : Level(kLevelWidth, kLevelHeight) {}
    Level(int width, int height, TileKind fill = TileKind::Empty);

    int width() const { return width_; }
    int height() const { return height_; }
    int area() const { return width_ * height_; }
    bool is_standard_size() const { return width_ == kLevelWidth && height_ == kLevelHeight; }

    bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }
    TileKind at(Cell c) const { return tiles_[index(c)]; }
    TileKind at(int col, int row) const { return at(Cell{col, row}); }
    void set(Cell c, TileKind t) { tiles_[index(c)] = t; }
    void set(int col, int row, TileKind t) { set(Cell{col, row}, t); }

    std::span<const TileKind> tiles() const { return tiles_; }

    const std::optional<Cell>& spawn() const { return spawn_; }
    /// Throws LevelError if the cell is out of bounds or blocking.
    void set_spawn(std::optional<Cell> spawn);

    int count(TileKind t) const;
    /// Copy of the grid with the spawn dropped.
    Level without_spawn() const;

    friend bool operator==(const Level&, const Level&) = default;

private:
    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * width_ + c.col; }

    int width_;
    int height_;
    std::vector<TileKind> tiles_;
    std::optional<Cell> spawn_;
};

/// Cells where the two grids differ; spawn is ignored.
int hamming_distance(const Level& a, const Level& b);

Level mirror(const Level& level);

/// Character mapping for level text files. Defaults follow the VGLC Lode Runner legend.
struct TileCharset {
    std::map<char, TileKind> decode;
    std::array<char, kTileKinds> encode{};
    char spawn = 'M';
    char fallback = '.';

    static TileCharset vglc();
    /// JSON object: {"tiles": {"B": "solid", ...}, "spawn": "M"}. The first character listed
    /// for a tile kind is its canonical output character.
    static TileCharset from_json_text(const std::string& text);
    static TileCharset load(const std::filesystem::path& path);
};

struct ParseWarning {
    int line = 0;
    int column = 0;
    std::string message;
};

/// Parses a 22x32 character grid. Spawn characters become Empty with the spawn recorded; unknown
/// characters become Empty and are reported through `warnings` when provided.
Level parse_level(std::string_view text, const TileCharset& charset = TileCharset::vglc(),
                  std::vector<ParseWarning>* warnings = nullptr, int width = kLevelWidth,
                  int height = kLevelHeight);

/// One line per row, newline-terminated.
std::string serialize_level(const Level& level, const TileCharset& charset = TileCharset::vglc());

Level load_level_file(const std::filesystem::path& path, const TileCharset& charset = TileCharset::vglc(),
                      std::vector<ParseWarning>* warnings = nullptr);

struct CorpusEntry {
    std::string id;
    Level level;
};

/// All *.txt files in `dir`, sorted by file name and identified by file stem; spawns are kept.
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& dir, const TileCharset& charset = TileCharset::vglc());

// ---------------------------------------------------------------------------
// One-hot encoding

inline constexpr int kPadColumns = 10;
inline constexpr int kGridWidth = kLevelWidth + kPadColumns;
inline constexpr int kCenterPad = kPadColumns / 2;
inline constexpr std::size_t kGridValues = static_cast<std::size_t>(kLevelHeight) * kGridWidth * kTileKinds;

/// 22x42x7 network input/output, row-major with channels innermost.
struct OneHotGrid {
    std::vector<float> values = std::vector<float>(kGridValues, 0.0f);

    float& at(int row, int col, int channel) { return values[offset(row, col, channel)]; }
    float at(int row, int col, int channel) const { return values[offset(row, col, channel)]; }

    static std::size_t offset(int row, int col, int channel) {
        return (static_cast<std::size_t>(row) * kGridWidth + col) * kTileKinds + channel;
    }

    friend bool operator==(const OneHotGrid&, const OneHotGrid&) = default;
};

/// Pads with Solid columns (left_pad on the left, 10 - left_pad on the right). Spawn is not encoded.
OneHotGrid encode_onehot(const Level& level, int left_pad = kCenterPad);

/// Per-cell argmax (lowest channel on ties), cropping columns crop_left .. crop_left + 31.
Level decode_onehot(const OneHotGrid& grid, int crop_left = kCenterPad);

OneHotGrid mirror(const OneHotGrid& grid);

/// For each level: left pads 0..10, each followed by its left-right mirror. 22 grids per level.
std::vector<OneHotGrid> augment(std::span<const Level> levels);

// ---------------------------------------------------------------------------
// Thematic split

enum class Theme { Gold, Platform, Ladder, All };
std::string_view theme_name(Theme t);
std::optional<Theme> theme_from_name(std::string_view name);

inline constexpr std::size_t kThemeSetSize = 50;

struct DatasetSplit {
    std::vector<std::string> gold;
    std::vector<std::string> platform;
    std::vector<std::string> ladder;

    const std::vector<std::string>& ids(Theme t) const;
    std::vector<std::string> all() const;
};

class SplitError : public std::invalid_argument {
public:
    explicit SplitError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Validates disjointness, per-theme counts, and (when `known_ids` is non-empty) that every id exists
/// and every known id is assigned.
DatasetSplit validate_split(DatasetSplit split, std::span<const std::string> known_ids = {},
                            std::size_t expected_per_theme = kThemeSetSize);

/// JSON object {"Gold": [...], "Platform": [...], "Ladder": [...]}.
DatasetSplit parse_split(const std::string& json_text, std::span<const std::string> known_ids = {},
                         std::size_t expected_per_theme = kThemeSetSize);
DatasetSplit load_split(const std::filesystem::path& path, std::span<const std::string> known_ids = {},
                        std::size_t expected_per_theme = kThemeSetSize);
std::string split_to_json(const DatasetSplit& split);

/// Default partition by simple features: gold count, ladder cells, and breakable/solid platform
/// density. Requires exactly 3 * per_theme entries.
DatasetSplit heuristic_split(std::span<const CorpusEntry> corpus, std::size_t per_theme = kThemeSetSize);

}  // namespace lode
