#pragma once

#include "lode/codec.hpp"
#include "lode/editor.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lode::journal {

/// One line of the append-only session journal.
struct Record {
    enum class Type { Create, Event, Expire };

    std::uint64_t seq = 0;
    Type type = Type::Event;
    std::string session;
    // Create only.
    std::uint64_t seed = 0;
    std::int64_t created_ms = 0;
    editor::Budgets budgets;
    std::optional<suggest::SuggestionSet> initial;
    // Event only.
    std::optional<editor::EditEvent> event;
};

codec::json record_to_json(const Record& record);
Record record_from_json(const codec::json& j);

struct ReadResult {
    std::vector<Record> records;
    /// True when the final line was cut short (crash mid-append) and was skipped.
    bool truncated_tail = false;
};

/// Reads every complete record. A malformed line other than an unterminated last line throws
/// codec::CodecError naming the line number.
ReadResult read(const std::filesystem::path& path);

/// Appends records as JSON lines, flushing each before returning. Thread-safe.
class Writer {
public:
    explicit Writer(const std::filesystem::path& path);
    void append(const Record& record);

private:
    std::mutex mutex_;
    std::ofstream out_;
    std::filesystem::path path_;
};

}  // namespace lode::journal
