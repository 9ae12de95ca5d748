#include "lode/codec.hpp"

#include <set>

namespace lode::codec {

namespace {

const json& member(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw CodecError(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw CodecError(path + "." + key, "missing");
    return *it;
}

int int_member(const json& j, const char* key, const std::string& path) {
    const auto& v = member(j, key, path);
    if (!v.is_number_integer()) throw CodecError(path + "." + key, "expected an integer");
    return v.get<int>();
}

std::string string_member(const json& j, const char* key, const std::string& path) {
    const auto& v = member(j, key, path);
    if (!v.is_string()) throw CodecError(path + "." + key, "expected a string");
    return v.get<std::string>();
}

TileKind tile_member(const json& j, const char* key, const std::string& path) {
    const auto name = string_member(j, key, path);
    const auto t = tile_from_name(name);
    if (!t) throw CodecError(path + "." + key, "unknown tile '" + name + "'");
    return *t;
}

}  // namespace

json cell_to_json(Cell c) { return {{"col", c.col}, {"row", c.row}}; }

Cell cell_from_json(const json& j, const std::string& path) {
    return {int_member(j, "col", path), int_member(j, "row", path)};
}

json level_to_json(const Level& level) {
    const auto text = serialize_level(level.without_spawn());
    json rows = json::array();
    for (std::size_t start = 0; start < text.size();) {
        const auto end = text.find('\n', start);
        rows.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return {{"width", level.width()},
            {"height", level.height()},
            {"rows", rows},
            {"spawn", level.spawn() ? cell_to_json(*level.spawn()) : json(nullptr)}};
}

Level level_from_json(const json& j, const std::string& path) {
    const auto& rows = member(j, "rows", path);
    if (!rows.is_array()) throw CodecError(path + ".rows", "expected an array of strings");
    std::string text;
    for (const auto& r : rows) {
        if (!r.is_string()) throw CodecError(path + ".rows", "expected an array of strings");
        text += r.get<std::string>();
        text += '\n';
    }
    const int height = static_cast<int>(rows.size());
    const int width = rows.empty() ? 0 : static_cast<int>(rows.front().get<std::string>().size());
    Level level;
    std::vector<ParseWarning> warnings;
    try {
        level = parse_level(text, TileCharset::vglc(), &warnings, width, height);
    } catch (const LevelError& e) {
        throw CodecError(path + ".rows", e.what());
    }
    if (!warnings.empty()) throw CodecError(path + ".rows", warnings.front().message);
    if (level.spawn()) throw CodecError(path + ".rows", "spawn must be given in the spawn field");
    if (const auto it = j.find("spawn"); it != j.end() && !it->is_null()) {
        try {
            level.set_spawn(cell_from_json(*it, path + ".spawn"));
        } catch (const LevelError& e) {
            throw CodecError(path + ".spawn", e.what());
        }
    }
    return level;
}

json suggestions_to_json(const suggest::SuggestionSet& set) {
    json items = json::array();
    for (const auto& s : set.items) {
        items.push_back({{"id", s.id},
                         {"model", suggest::role_name(s.source)},
                         {"variance", suggest::variance_name(s.variance)},
                         {"level", level_to_json(s.level)}});
    }
    return {{"seed", std::to_string(set.seed)}, {"generation", set.generation}, {"items", items}};
}

suggest::SuggestionSet suggestions_from_json(const json& j, const std::string& path) {
    suggest::SuggestionSet set;
    const auto seed = string_member(j, "seed", path);
    try {
        std::size_t used = 0;
        set.seed = std::stoull(seed, &used);
        if (used != seed.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw CodecError(path + ".seed", "expected a decimal unsigned integer");
    }
    set.generation = int_member(j, "generation", path);
    const auto& items = member(j, "items", path);
    if (!items.is_array() || items.size() != suggest::kSuggestionCount) {
        throw CodecError(path + ".items", "expected 6 suggestions");
    }
    for (int id = 0; id < suggest::kSuggestionCount; ++id) {
        const auto item_path = path + ".items[" + std::to_string(id) + "]";
        const auto& item = items[static_cast<std::size_t>(id)];
        if (int_member(item, "id", item_path) != id) throw CodecError(item_path + ".id", "suggestions must be in id order");
        const auto role = suggest::role_of(id);
        const auto variance = suggest::variance_of(id);
        if (string_member(item, "model", item_path) != suggest::role_name(role) ||
            string_member(item, "variance", item_path) != suggest::variance_name(variance)) {
            throw CodecError(item_path, "model/variance do not match the id");
        }
        set.items.push_back({level_from_json(member(item, "level", item_path), item_path + ".level"), role, variance, id});
    }
    return set;
}

json event_to_json(const editor::EditEvent& e) {
    json j{{"kind", editor::event_kind_name(e.kind)}, {"t", e.timestamp_ms}};
    if (e.suggestion_id) j["suggestion"] = *e.suggestion_id;
    if (e.size) j["size"] = *e.size;
    if (e.cell) j["cell"] = cell_to_json(*e.cell);
    if (!e.changes.empty()) {
        json changes = json::array();
        for (const auto& c : e.changes) {
            changes.push_back({{"col", c.cell.col}, {"row", c.cell.row}, {"tile", tile_name(c.tile)}});
        }
        j["changes"] = changes;
    }
    if (e.suggestions) j["suggestions"] = suggestions_to_json(*e.suggestions);
    if (e.level_token) j["level"] = *e.level_token;
    if (e.score) j["score"] = *e.score;
    return j;
}

editor::EditEvent event_from_json(const json& j, const std::string& path) {
    static const std::set<std::string> known = {"kind", "t", "suggestion", "size", "cell",
                                                "changes", "suggestions", "level", "score"};
    if (!j.is_object()) throw CodecError(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw CodecError(path + "." + key, "unknown field");
    }
    editor::EditEvent e;
    const auto kind_name = string_member(j, "kind", path);
    const auto kind = editor::event_kind_from_name(kind_name);
    if (!kind) throw CodecError(path + ".kind", "unknown event kind '" + kind_name + "'");
    e.kind = *kind;
    const auto& t = member(j, "t", path);
    if (!t.is_number_integer()) throw CodecError(path + ".t", "expected integer milliseconds");
    e.timestamp_ms = t.get<std::int64_t>();
    if (j.contains("suggestion")) e.suggestion_id = int_member(j, "suggestion", path);
    if (j.contains("size")) e.size = int_member(j, "size", path);
    if (j.contains("cell")) e.cell = cell_from_json(j["cell"], path + ".cell");
    if (j.contains("changes")) {
        const auto& changes = j["changes"];
        if (!changes.is_array()) throw CodecError(path + ".changes", "expected an array");
        for (std::size_t i = 0; i < changes.size(); ++i) {
            const auto p = path + ".changes[" + std::to_string(i) + "]";
            e.changes.push_back({cell_from_json(changes[i], p), tile_member(changes[i], "tile", p)});
        }
    }
    if (j.contains("suggestions")) e.suggestions = suggestions_from_json(j["suggestions"], path + ".suggestions");
    if (j.contains("level")) e.level_token = string_member(j, "level", path);
    if (j.contains("score")) {
        if (!j["score"].is_number()) throw CodecError(path + ".score", "expected a number");
        e.score = j["score"].get<double>();
    }
    if (auto problem = editor::validate_event(e)) throw CodecError(path, *problem);
    return e;
}

json report_to_json(const PlayabilityReport& report) {
    json unreachable = json::array();
    for (const auto c : report.unreachable_cells) unreachable.push_back(cell_to_json(c));
    return {{"playable", report.playable},
            {"has_spawn", report.has_spawn},
            {"reachable_gold", report.reachable_gold},
            {"total_gold", report.total_gold},
            {"unreachable_cells", unreachable},
            {"note", report.note}};
}

}  // namespace lode::codec
