#pragma once

#include "lode/editor.hpp"
#include "lode/level.hpp"
#include "lode/playability.hpp"
#include "lode/suggest.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>

namespace lode::codec {

using json = nlohmann::json;

/// Thrown when a JSON document does not have the expected shape. `path` names the offending field.
class CodecError : public std::invalid_argument {
public:
    CodecError(std::string path, const std::string& message)
        : std::invalid_argument(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

json cell_to_json(Cell c);
Cell cell_from_json(const json& j, const std::string& path = "cell");

/// {"width", "height", "rows": [VGLC strings without spawn marker], "spawn": {"col","row"} | null}
json level_to_json(const Level& level);
Level level_from_json(const json& j, const std::string& path = "level");

/// The seed travels as a decimal string so that 64-bit values survive JavaScript clients.
json suggestions_to_json(const suggest::SuggestionSet& set);
suggest::SuggestionSet suggestions_from_json(const json& j, const std::string& path = "suggestions");

/// {"kind": "BrushApply", "t": ms, ...optional fields named suggestion, size, cell, changes,
/// suggestions, level, score}
json event_to_json(const editor::EditEvent& e);
/// Parses and validates the payload against the kind.
editor::EditEvent event_from_json(const json& j, const std::string& path = "event");

json report_to_json(const PlayabilityReport& report);

}  // namespace lode::codec
