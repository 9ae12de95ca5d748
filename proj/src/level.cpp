#include "lode/level.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace lode {

namespace {

constexpr std::array<std::string_view, kTileKinds> kTileNames = {
    "solid", "breakable", "ladder", "rope", "gold", "enemy", "empty",
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TileKind tile_from_index(int index) {
    if (index < 0 || index >= kTileKinds) throw LevelError("tile index out of range: " + std::to_string(index));
    return static_cast<TileKind>(index);
}

std::string_view tile_name(TileKind t) { return kTileNames[tile_index(t)]; }

std::optional<TileKind> tile_from_name(std::string_view name) {
    for (int i = 0; i < kTileKinds; ++i) {
        if (kTileNames[i] == name) return static_cast<TileKind>(i);
    }
    return std::nullopt;
}

Level::Level(int width, int height, TileKind fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw LevelError("level dimensions must be positive");
    tiles_.assign(static_cast<std::size_t>(width) * height, fill);
}

void Level::set_spawn(std::optional<Cell> spawn) {
    if (spawn) {
        if (!in_bounds(*spawn)) throw LevelError("spawn out of bounds");
        if (is_blocking(at(*spawn))) throw LevelError("spawn on a blocking tile");
    }
    spawn_ = spawn;
}

int Level::count(TileKind t) const {
    return static_cast<int>(std::count(tiles_.begin(), tiles_.end(), t));
}

Level Level::without_spawn() const {
    Level copy = *this;
    copy.spawn_.reset();
    return copy;
}

int hamming_distance(const Level& a, const Level& b) {
    if (a.width() != b.width() || a.height() != b.height()) throw LevelError("hamming distance of differently sized levels");
    int diff = 0;
    for (std::size_t i = 0; i < a.tiles().size(); ++i) diff += a.tiles()[i] != b.tiles()[i];
    return diff;
}

Level mirror(const Level& level) {
    Level out(level.width(), level.height());
    for (int r = 0; r < level.height(); ++r) {
        for (int c = 0; c < level.width(); ++c) out.set(level.width() - 1 - c, r, level.at(c, r));
    }
    if (level.spawn()) out.set_spawn(Cell{level.width() - 1 - level.spawn()->col, level.spawn()->row});
    return out;
}

// ---------------------------------------------------------------------------

TileCharset TileCharset::vglc() {
    TileCharset cs;
    const std::pair<char, TileKind> table[] = {
        {'B', TileKind::Solid}, {'b', TileKind::Breakable}, {'#', TileKind::Ladder}, {'-', TileKind::Rope},
        {'G', TileKind::Gold},  {'E', TileKind::Enemy},     {'.', TileKind::Empty},
    };
    for (const auto& [ch, kind] : table) {
        cs.decode[ch] = kind;
        cs.encode[tile_index(kind)] = ch;
    }
    cs.spawn = 'M';
    cs.fallback = '.';
    return cs;
}

TileCharset TileCharset::from_json_text(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    TileCharset cs;
    std::array<bool, kTileKinds> seen{};
    for (const auto& [key, value] : doc.at("tiles").items()) {
        if (key.size() != 1) throw LevelError("charset key must be one character: '" + key + "'");
        const auto name = value.get<std::string>();
        const auto kind = tile_from_name(name);
        if (!kind) throw LevelError("charset maps '" + key + "' to unknown tile '" + name + "'");
        cs.decode[key[0]] = *kind;
    }
    // nlohmann orders object keys; take canonical output characters from the optional "canonical"
    // table, else from the first (sorted) key mapping to each kind.
    if (doc.contains("canonical")) {
        for (const auto& [name, ch] : doc.at("canonical").items()) {
            const auto kind = tile_from_name(name);
            const auto s = ch.get<std::string>();
            if (!kind || s.size() != 1) throw LevelError("bad canonical entry for '" + name + "'");
            cs.encode[tile_index(*kind)] = s[0];
            seen[tile_index(*kind)] = true;
        }
    }
    for (const auto& [ch, kind] : cs.decode) {
        if (!seen[tile_index(kind)]) {
            cs.encode[tile_index(kind)] = ch;
            seen[tile_index(kind)] = true;
        }
    }
    for (int i = 0; i < kTileKinds; ++i) {
        if (!seen[i]) throw LevelError("charset has no character for tile '" + std::string(kTileNames[i]) + "'");
    }
    const auto spawn = doc.value("spawn", std::string("M"));
    if (spawn.size() != 1) throw LevelError("spawn character must be one character");
    cs.spawn = spawn[0];
    cs.fallback = cs.encode[tile_index(TileKind::Empty)];
    return cs;
}

TileCharset TileCharset::load(const std::filesystem::path& path) { return from_json_text(read_file(path)); }

Level parse_level(std::string_view text, const TileCharset& charset, std::vector<ParseWarning>* warnings, int width,
                  int height) {
    if (text.empty()) throw LevelError("empty level text");
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (static_cast<int>(lines.size()) != height) {
        throw LevelError("expected " + std::to_string(height) + " lines, got " + std::to_string(lines.size()));
    }
    Level level(width, height);
    std::optional<Cell> spawn;
    for (int r = 0; r < height; ++r) {
        if (static_cast<int>(lines[r].size()) != width) {
            throw LevelError("line " + std::to_string(r + 1) + ": expected " + std::to_string(width) +
                             " columns, got " + std::to_string(lines[r].size()));
        }
        for (int c = 0; c < width; ++c) {
            const char ch = lines[r][c];
            if (ch == charset.spawn) {
                level.set(c, r, TileKind::Empty);
                if (!spawn) {
                    spawn = Cell{c, r};
                } else if (warnings) {
                    warnings->push_back({r + 1, c + 1, "extra spawn character treated as empty"});
                }
                continue;
            }
            const auto it = charset.decode.find(ch);
            if (it == charset.decode.end()) {
                level.set(c, r, TileKind::Empty);
                if (warnings) warnings->push_back({r + 1, c + 1, std::string("unknown character '") + ch + "' mapped to empty"});
            } else {
                level.set(c, r, it->second);
            }
        }
    }
    level.set_spawn(spawn);
    return level;
}

std::string serialize_level(const Level& level, const TileCharset& charset) {
    std::string out;
    out.reserve(static_cast<std::size_t>(level.width() + 1) * level.height());
    for (int r = 0; r < level.height(); ++r) {
        for (int c = 0; c < level.width(); ++c) {
            if (level.spawn() && *level.spawn() == Cell{c, r}) {
                out += charset.spawn;
            } else {
                out += charset.encode[tile_index(level.at(c, r))];
            }
        }
        out += '\n';
    }
    return out;
}

Level load_level_file(const std::filesystem::path& path, const TileCharset& charset, std::vector<ParseWarning>* warnings) {
    try {
        return parse_level(read_file(path), charset, warnings);
    } catch (const LevelError& e) {
        throw LevelError(path.filename().string() + ": " + e.what());
    }
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& dir, const TileCharset& charset) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("corpus directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<CorpusEntry> corpus;
    corpus.reserve(files.size());
    for (const auto& f : files) corpus.push_back({f.stem().string(), load_level_file(f, charset)});
    return corpus;
}

// ---------------------------------------------------------------------------

OneHotGrid encode_onehot(const Level& level, int left_pad) {
    if (left_pad < 0 || left_pad > kPadColumns) {
        throw LevelError("left_pad must be in 0..10, got " + std::to_string(left_pad));
    }
    if (!level.is_standard_size()) throw LevelError("one-hot encoding needs a 32x22 level");
    OneHotGrid grid;
    const int solid = tile_index(TileKind::Solid);
    for (int r = 0; r < kLevelHeight; ++r) {
        for (int c = 0; c < kGridWidth; ++c) {
            const int src = c - left_pad;
            const int channel = (src >= 0 && src < kLevelWidth) ? tile_index(level.at(src, r)) : solid;
            grid.at(r, c, channel) = 1.0f;
        }
    }
    return grid;
}

Level decode_onehot(const OneHotGrid& grid, int crop_left) {
    if (grid.values.size() != kGridValues) throw LevelError("one-hot grid has wrong size");
    if (crop_left < 0 || crop_left > kPadColumns) throw LevelError("crop offset out of range");
    Level level;
    for (int r = 0; r < kLevelHeight; ++r) {
        for (int c = 0; c < kLevelWidth; ++c) {
            int best = 0;
            for (int k = 1; k < kTileKinds; ++k) {
                if (grid.at(r, c + crop_left, k) > grid.at(r, c + crop_left, best)) best = k;
            }
            level.set(c, r, static_cast<TileKind>(best));
        }
    }
    return level;
}

OneHotGrid mirror(const OneHotGrid& grid) {
    OneHotGrid out;
    for (int r = 0; r < kLevelHeight; ++r) {
        for (int c = 0; c < kGridWidth; ++c) {
            for (int k = 0; k < kTileKinds; ++k) out.at(r, kGridWidth - 1 - c, k) = grid.at(r, c, k);
        }
    }
    return out;
}

std::vector<OneHotGrid> augment(std::span<const Level> levels) {
    std::vector<OneHotGrid> out;
    out.reserve(levels.size() * 2 * (kPadColumns + 1));
    for (const auto& level : levels) {
        for (int pad = 0; pad <= kPadColumns; ++pad) {
            auto grid = encode_onehot(level, pad);
            auto flipped = mirror(grid);
            out.push_back(std::move(grid));
            out.push_back(std::move(flipped));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view theme_name(Theme t) {
    switch (t) {
        case Theme::Gold: return "Gold";
        case Theme::Platform: return "Platform";
        case Theme::Ladder: return "Ladder";
        case Theme::All: return "All";
    }
    return "?";
}

std::optional<Theme> theme_from_name(std::string_view name) {
    for (const auto t : {Theme::Gold, Theme::Platform, Theme::Ladder, Theme::All}) {
        if (theme_name(t) == name) return t;
    }
    return std::nullopt;
}

const std::vector<std::string>& DatasetSplit::ids(Theme t) const {
    switch (t) {
        case Theme::Gold: return gold;
        case Theme::Platform: return platform;
        case Theme::Ladder: return ladder;
        case Theme::All: break;
    }
    throw std::invalid_argument("Theme::All is derived; use all()");
}

std::vector<std::string> DatasetSplit::all() const {
    std::vector<std::string> out;
    out.insert(out.end(), gold.begin(), gold.end());
    out.insert(out.end(), platform.begin(), platform.end());
    out.insert(out.end(), ladder.begin(), ladder.end());
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += "; ";
        out += s;
    }
    return out;
}

}  // namespace

SplitError::SplitError(std::vector<std::string> problems)
    : std::invalid_argument("invalid split: " + join(problems)), problems_(std::move(problems)) {}

DatasetSplit validate_split(DatasetSplit split, std::span<const std::string> known_ids, std::size_t expected) {
    std::vector<std::string> problems;
    std::map<std::string, std::string> owner;
    for (const auto t : {Theme::Gold, Theme::Platform, Theme::Ladder}) {
        const auto& ids = split.ids(t);
        if (ids.size() != expected) {
            problems.push_back(std::string(theme_name(t)) + ": expected " + std::to_string(expected) + " levels, got " +
                               std::to_string(ids.size()));
        }
        for (const auto& id : ids) {
            const auto [it, inserted] = owner.emplace(id, std::string(theme_name(t)));
            if (!inserted) {
                problems.push_back("'" + id + "' appears in both " + it->second + " and " + std::string(theme_name(t)));
            }
        }
    }
    if (!known_ids.empty()) {
        const std::set<std::string> known(known_ids.begin(), known_ids.end());
        for (const auto& [id, theme] : owner) {
            if (!known.contains(id)) problems.push_back("'" + id + "' (" + theme + ") is not in the corpus");
        }
        for (const auto& id : known) {
            if (!owner.contains(id)) problems.push_back("'" + id + "' is not assigned to any theme");
        }
    }
    if (!problems.empty()) throw SplitError(std::move(problems));
    return split;
}

DatasetSplit parse_split(const std::string& json_text, std::span<const std::string> known_ids, std::size_t expected) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw SplitError({std::string("malformed split file: ") + e.what()});
    }
    DatasetSplit split;
    std::vector<std::string> problems;
    for (const auto t : {Theme::Gold, Theme::Platform, Theme::Ladder}) {
        const auto key = std::string(theme_name(t));
        if (!doc.contains(key) || !doc[key].is_array()) {
            problems.push_back("missing theme list '" + key + "'");
            continue;
        }
        auto& dest = t == Theme::Gold ? split.gold : t == Theme::Platform ? split.platform : split.ladder;
        for (const auto& v : doc[key]) dest.push_back(v.get<std::string>());
    }
    if (!problems.empty()) throw SplitError(std::move(problems));
    return validate_split(std::move(split), known_ids, expected);
}

DatasetSplit load_split(const std::filesystem::path& path, std::span<const std::string> known_ids, std::size_t expected) {
    return parse_split(read_file(path), known_ids, expected);
}

std::string split_to_json(const DatasetSplit& split) {
    nlohmann::ordered_json doc;
    doc["Gold"] = split.gold;
    doc["Platform"] = split.platform;
    doc["Ladder"] = split.ladder;
    return doc.dump(2) + "\n";
}

DatasetSplit heuristic_split(std::span<const CorpusEntry> corpus, std::size_t per_theme) {
    if (corpus.size() != 3 * per_theme) {
        throw SplitError({"heuristic split needs " + std::to_string(3 * per_theme) + " levels, got " +
                          std::to_string(corpus.size())});
    }
    // Percentile rank per feature so the three scores are comparable.
    const std::size_t n = corpus.size();
    auto ranks = [&](auto feature) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return feature(corpus[a].level) < feature(corpus[b].level); });
        std::vector<double> r(n);
        for (std::size_t pos = 0; pos < n; ++pos) r[order[pos]] = static_cast<double>(pos) / static_cast<double>(n);
        return r;
    };
    const auto gold = ranks([](const Level& l) { return l.count(TileKind::Gold); });
    const auto ladder = ranks([](const Level& l) { return l.count(TileKind::Ladder); });
    const auto platform = ranks([](const Level& l) { return l.count(TileKind::Breakable) + l.count(TileKind::Solid); });

    std::vector<bool> taken(n, false);
    DatasetSplit split;
    const std::array<std::pair<const std::vector<double>*, std::vector<std::string>*>, 3> draft = {{
        {&gold, &split.gold}, {&ladder, &split.ladder}, {&platform, &split.platform}}};
    for (std::size_t round = 0; round < per_theme; ++round) {
        for (const auto& [score, dest] : draft) {
            std::size_t best = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (!taken[i] && (best == n || (*score)[i] > (*score)[best])) best = i;
            }
            taken[best] = true;
            dest->push_back(corpus[best].id);
        }
    }
    for (auto* ids : {&split.gold, &split.platform, &split.ladder}) std::sort(ids->begin(), ids->end());
    return split;
}

}  // namespace lode
