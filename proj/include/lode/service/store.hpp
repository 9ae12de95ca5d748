#pragma once

#include "lode/editor.hpp"
#include "lode/journal.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <stdexcept>
#include <string>

namespace lode::service {

/// Error surfaced to HTTP clients: status plus a machine-readable code.
class ApiError : public std::runtime_error {
public:
    ApiError(int status, std::string code, const std::string& message, codec::json details = nullptr)
        : std::runtime_error(message), status_(status), code_(std::move(code)), details_(std::move(details)) {}
    int status() const { return status_; }
    const std::string& code() const { return code_; }
    const codec::json& details() const { return details_; }

private:
    int status_;
    std::string code_;
    codec::json details_;
};

using Clock = std::function<std::int64_t()>;
using Scorer = std::function<double(const Level&)>;

struct StoreConfig {
    std::filesystem::path data_dir;
    editor::Budgets budgets;
    std::int64_t expiry_ms = 24LL * 3600 * 1000;
    /// Journal records between snapshots; 0 disables snapshots.
    std::size_t snapshot_every = 256;
    /// Seeds session ids and session seeds; unset draws from std::random_device.
    std::optional<std::uint64_t> seed;
};

struct SessionEntry {
    std::mutex mutex;
    editor::Session session;
    suggest::SuggestionSet initial;
    double score = 0.0;
    std::int64_t last_active = 0;
    bool removed = false;

    SessionEntry(editor::Session s, suggest::SuggestionSet init) : session(std::move(s)), initial(std::move(init)) {}
};

/// Sessions in memory, backed by an append-only journal (journal.jsonl) and periodic snapshots
/// (snapshot.json) in the data directory. Every state change is journaled before the caller
/// acknowledges it; construction replays snapshot plus journal tail.
class SessionStore {
public:
    SessionStore(StoreConfig config, editor::SuggestionGenerator generator, Scorer scorer,
                 Clock clock = editor::unix_millis);

    /// Creates a session and returns its id. Throws ApiError 503 without a generator.
    std::string create();

    /// Runs `f(entry)` under the session lock, journals the events it produced and refreshes the
    /// score when the level changed. Still under the lock, returns `view(entry, result of f)`.
    /// If f throws nothing is journaled. Unknown or expired ids raise ApiError 404.
    template <class F, class V>
    auto mutate(const std::string& id, F&& f, V&& view) {
        auto result = [&] {
            std::shared_lock guard(snapshot_mutex_);
            auto entry = find(id);
            std::lock_guard lock(entry->mutex);
            if (entry->removed) throw not_found(id);
            const auto before_events = entry->session.events().size();
            const Level before_level = entry->session.level();
            auto r = f(*entry);
            after_mutation(id, *entry, before_events, before_level);
            return view(static_cast<const SessionEntry&>(*entry), std::move(r));
        }();
        maybe_snapshot();
        return result;
    }

    /// Runs `f(entry)` under the session lock without journaling.
    template <class F>
    auto read(const std::string& id, F&& f) {
        std::shared_lock guard(snapshot_mutex_);
        auto entry = find(id);
        std::lock_guard lock(entry->mutex);
        if (entry->removed) throw not_found(id);
        return f(static_cast<const SessionEntry&>(*entry));
    }

    const editor::SuggestionGenerator& generator() const;
    const Scorer& scorer() const { return scorer_; }
    std::int64_t now() const { return clock_(); }
    std::size_t session_count() const;
    /// Drops sessions idle for longer than the expiry, journaling an expire record for each.
    std::size_t expire_idle();
    void write_snapshot();

    std::filesystem::path journal_path() const { return config_.data_dir / "journal.jsonl"; }
    std::filesystem::path snapshot_path() const { return config_.data_dir / "snapshot.json"; }
    const StoreConfig& config() const { return config_; }

private:
    std::shared_ptr<SessionEntry> find(const std::string& id);
    static ApiError not_found(const std::string& id);
    void after_mutation(const std::string& id, SessionEntry& entry, std::size_t before_events, const Level& before_level);
    /// Assigns the next sequence number and appends; caller holds no journal lock.
    void append(journal::Record record);
    void maybe_snapshot();
    void restore();
    void apply_record(const journal::Record& record);

    StoreConfig config_;
    editor::SuggestionGenerator generator_;
    Scorer scorer_;
    Clock clock_;
    std::unique_ptr<journal::Writer> writer_;

    mutable std::mutex map_mutex_;
    std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;
    std::mt19937_64 rng_;

    std::mutex journal_mutex_;
    std::uint64_t seq_ = 0;
    std::size_t since_snapshot_ = 0;
    std::shared_mutex snapshot_mutex_;
};

}  // namespace lode::service
