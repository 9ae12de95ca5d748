#include "lode/journal.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace lode::journal {

namespace {

constexpr const char* kTypeNames[] = {"create", "event", "expire"};

}  // namespace

codec::json record_to_json(const Record& r) {
    codec::json j{{"seq", r.seq}, {"type", kTypeNames[static_cast<int>(r.type)]}, {"session", r.session}};
    if (r.type == Record::Type::Create) {
        j["seed"] = std::to_string(r.seed);
        j["created"] = r.created_ms;
        j["budgets"] = {{"refreshes", r.budgets.max_refreshes}, {"wand", r.budgets.max_wand_tiles}};
        j["suggestions"] = codec::suggestions_to_json(*r.initial);
    } else if (r.type == Record::Type::Event) {
        j["event"] = codec::event_to_json(*r.event);
    }
    return j;
}

Record record_from_json(const codec::json& j) {
    using codec::CodecError;
    if (!j.is_object()) throw CodecError("record", "expected an object");
    Record r;
    try {
        r.seq = j.at("seq").get<std::uint64_t>();
        r.session = j.at("session").get<std::string>();
        const auto type = j.at("type").get<std::string>();
        if (type == "create") {
            r.type = Record::Type::Create;
            r.seed = std::stoull(j.at("seed").get<std::string>());
            r.created_ms = j.at("created").get<std::int64_t>();
            r.budgets.max_refreshes = j.at("budgets").at("refreshes").get<int>();
            r.budgets.max_wand_tiles = j.at("budgets").at("wand").get<int>();
            r.initial = codec::suggestions_from_json(j.at("suggestions"));
        } else if (type == "event") {
            r.type = Record::Type::Event;
            r.event = codec::event_from_json(j.at("event"));
        } else if (type == "expire") {
            r.type = Record::Type::Expire;
        } else {
            throw CodecError("record.type", "unknown record type '" + type + "'");
        }
    } catch (const CodecError&) {
        throw;
    } catch (const std::exception& e) {
        throw CodecError("record", e.what());
    }
    return r;
}

ReadResult read(const std::filesystem::path& path) {
    ReadResult result;
    std::ifstream in(path, std::ios::binary);
    if (!in) return result;
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    std::size_t start = 0;
    int line_no = 0;
    while (start < text.size()) {
        ++line_no;
        const auto end = text.find('\n', start);
        const bool terminated = end != std::string::npos;
        const std::string line = text.substr(start, terminated ? end - start : std::string::npos);
        start = terminated ? end + 1 : text.size();
        if (line.empty()) continue;
        try {
            result.records.push_back(record_from_json(codec::json::parse(line)));
        } catch (const std::exception& e) {
            if (!terminated) {
                result.truncated_tail = true;
                break;
            }
            throw codec::CodecError("journal line " + std::to_string(line_no), e.what());
        }
    }
    return result;
}

Writer::Writer(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // A crash can leave an unterminated last line. Keep it if it parses (read() accepted it),
    // otherwise cut it off so the next record does not land on a corrupt line.
    bool needs_newline = false;
    if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
        std::ifstream in(path, std::ios::binary);
        const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (content.back() != '\n') {
            const auto cut = content.find_last_of('\n');
            const std::size_t start = cut == std::string::npos ? 0 : cut + 1;
            if (codec::json::accept(content.substr(start))) {
                needs_newline = true;
            } else {
                in.close();
                std::filesystem::resize_file(path, start);
            }
        }
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw std::runtime_error("cannot open journal " + path.string());
    if (needs_newline) out_ << '\n' << std::flush;
}

void Writer::append(const Record& record) {
    const std::string line = record_to_json(record).dump() + "\n";
    std::lock_guard lock(mutex_);
    out_ << line << std::flush;
    if (!out_) throw std::runtime_error("journal append failed: " + path_.string());
}

}  // namespace lode::journal
