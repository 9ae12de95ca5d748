#include "lode/service/store.hpp"

#include <fstream>
#include <sstream>

namespace lode::service {

namespace {

std::string hex_id(std::mt19937_64& rng) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string id;
    for (int word = 0; word < 2; ++word) {
        auto v = rng();
        for (int i = 0; i < 16; ++i, v >>= 4) id += kDigits[v & 15];
    }
    return id;
}

std::uint64_t initial_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

SessionStore::SessionStore(StoreConfig config, editor::SuggestionGenerator generator, Scorer scorer, Clock clock)
    : config_(std::move(config)),
      generator_(std::move(generator)),
      scorer_(std::move(scorer)),
      clock_(std::move(clock)),
      rng_(initial_seed(config_.seed)) {
    std::filesystem::create_directories(config_.data_dir);
    restore();
    writer_ = std::make_unique<journal::Writer>(journal_path());
}

ApiError SessionStore::not_found(const std::string& id) {
    return ApiError(404, "session_not_found", "no session '" + id + "'");
}

const editor::SuggestionGenerator& SessionStore::generator() const {
    if (!generator_) throw ApiError(503, "models_unavailable", "suggestion models are not loaded");
    return generator_;
}

std::size_t SessionStore::session_count() const {
    std::lock_guard lock(map_mutex_);
    return sessions_.size();
}

std::string SessionStore::create() {
    expire_idle();
    const auto& gen = generator();
    std::string id;
    std::uint64_t seed = 0;
    {
        std::lock_guard lock(map_mutex_);
        do {
            id = hex_id(rng_);
        } while (sessions_.contains(id));
        seed = rng_();
    }
    {
        std::shared_lock guard(snapshot_mutex_);
        const auto now = clock_();
        editor::Session session(id, seed, gen, config_.budgets, now);
        auto entry = std::make_shared<SessionEntry>(std::move(session), suggest::SuggestionSet{});
        entry->initial = entry->session.suggestions();
        entry->last_active = now;
        entry->score = scorer_ ? scorer_(entry->session.level()) : 0.0;

        journal::Record record;
        record.type = journal::Record::Type::Create;
        record.session = id;
        record.seed = seed;
        record.created_ms = now;
        record.budgets = config_.budgets;
        record.initial = entry->initial;
        append(std::move(record));

        std::lock_guard lock(map_mutex_);
        sessions_.emplace(id, std::move(entry));
    }
    maybe_snapshot();
    return id;
}

std::shared_ptr<SessionEntry> SessionStore::find(const std::string& id) {
    std::lock_guard lock(map_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw not_found(id);
    auto entry = it->second;
    std::lock_guard entry_lock(entry->mutex);
    if (clock_() - entry->last_active > config_.expiry_ms) {
        journal::Record record;
        record.type = journal::Record::Type::Expire;
        record.session = id;
        append(std::move(record));
        entry->removed = true;
        sessions_.erase(it);
        throw not_found(id);
    }
    return entry;
}

std::size_t SessionStore::expire_idle() {
    std::size_t removed = 0;
    {
        std::shared_lock guard(snapshot_mutex_);
        std::lock_guard lock(map_mutex_);
        const auto now = clock_();
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            std::lock_guard entry_lock(it->second->mutex);
            if (now - it->second->last_active <= config_.expiry_ms) {
                ++it;
                continue;
            }
            journal::Record record;
            record.type = journal::Record::Type::Expire;
            record.session = it->first;
            append(std::move(record));
            it->second->removed = true;
            it = sessions_.erase(it);
            ++removed;
        }
    }
    if (removed > 0) maybe_snapshot();
    return removed;
}

void SessionStore::after_mutation(const std::string& id, SessionEntry& entry, std::size_t before_events,
                                  const Level& before_level) {
    const auto& events = entry.session.events();
    for (std::size_t i = before_events; i < events.size(); ++i) {
        journal::Record record;
        record.type = journal::Record::Type::Event;
        record.session = id;
        record.event = events[i];
        append(std::move(record));
    }
    entry.last_active = clock_();
    if (entry.session.level() != before_level && scorer_) entry.score = scorer_(entry.session.level());
}

void SessionStore::append(journal::Record record) {
    std::lock_guard lock(journal_mutex_);
    record.seq = seq_ + 1;
    writer_->append(record);
    seq_ = record.seq;
    ++since_snapshot_;
}

void SessionStore::maybe_snapshot() {
    {
        std::lock_guard lock(journal_mutex_);
        if (config_.snapshot_every == 0 || since_snapshot_ < config_.snapshot_every) return;
    }
    write_snapshot();
}

void SessionStore::write_snapshot() {
    std::unique_lock guard(snapshot_mutex_);
    codec::json sessions = codec::json::array();
    {
        std::lock_guard lock(map_mutex_);
        for (const auto& [id, entry] : sessions_) {
            std::lock_guard entry_lock(entry->mutex);
            const auto& s = entry->session;
            codec::json events = codec::json::array();
            for (const auto& e : s.events()) events.push_back(codec::event_to_json(e));
            sessions.push_back({{"id", id},
                                {"seed", std::to_string(s.seed())},
                                {"created", s.created_at_ms()},
                                {"last_active", entry->last_active},
                                {"budgets", {{"refreshes", s.budgets().max_refreshes}, {"wand", s.budgets().max_wand_tiles}}},
                                {"initial", codec::suggestions_to_json(entry->initial)},
                                {"events", events}});
        }
    }
    std::uint64_t seq = 0;
    {
        std::lock_guard lock(journal_mutex_);
        seq = seq_;
        since_snapshot_ = 0;
    }
    const codec::json doc{{"seq", seq}, {"sessions", sessions}};
    const auto tmp = snapshot_path().string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << doc.dump();
        out.flush();
        if (!out) throw std::runtime_error("cannot write snapshot " + tmp);
    }
    std::filesystem::rename(tmp, snapshot_path());
}

void SessionStore::restore() {
    if (std::filesystem::exists(snapshot_path())) {
        std::ifstream in(snapshot_path(), std::ios::binary);
        std::stringstream buffer;
        buffer << in.rdbuf();
        const auto doc = codec::json::parse(buffer.str());
        seq_ = doc.at("seq").get<std::uint64_t>();
        for (const auto& js : doc.at("sessions")) {
            const auto id = js.at("id").get<std::string>();
            editor::Budgets budgets{js.at("budgets").at("refreshes").get<int>(), js.at("budgets").at("wand").get<int>()};
            auto initial = codec::suggestions_from_json(js.at("initial"));
            editor::Session session(id, std::stoull(js.at("seed").get<std::string>()), initial, budgets,
                                    js.at("created").get<std::int64_t>());
            for (const auto& je : js.at("events")) session.apply_event(codec::event_from_json(je));
            auto entry = std::make_shared<SessionEntry>(std::move(session), std::move(initial));
            entry->last_active = js.at("last_active").get<std::int64_t>();
            sessions_.emplace(id, std::move(entry));
        }
    }
    const auto tail = journal::read(journal_path());
    for (const auto& record : tail.records) {
        if (record.seq <= seq_) continue;
        apply_record(record);
        seq_ = record.seq;
    }
    for (auto& [id, entry] : sessions_) entry->score = scorer_ ? scorer_(entry->session.level()) : 0.0;
    since_snapshot_ = 0;
}

void SessionStore::apply_record(const journal::Record& record) {
    switch (record.type) {
        case journal::Record::Type::Create: {
            editor::Session session(record.session, record.seed, *record.initial, record.budgets, record.created_ms);
            auto entry = std::make_shared<SessionEntry>(std::move(session), *record.initial);
            entry->last_active = record.created_ms;
            sessions_[record.session] = std::move(entry);
            break;
        }
        case journal::Record::Type::Event: {
            const auto it = sessions_.find(record.session);
            if (it == sessions_.end()) break;
            it->second->session.apply_event(*record.event);
            it->second->last_active = std::max(it->second->last_active, record.event->timestamp_ms);
            break;
        }
        case journal::Record::Type::Expire: sessions_.erase(record.session); break;
    }
}

}  // namespace lode::service
