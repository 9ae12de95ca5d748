#pragma once

#include "lode/editor.hpp"
#include "lode/suggest.hpp"
#include "lode/vae.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace fixtures {

inline const std::filesystem::path kData = LODE_DATA_DIR;

inline const std::vector<lode::CorpusEntry>& corpus() {
    static const auto c = lode::load_corpus(kData / "corpus");
    return c;
}

/// Small, quickly trained models: hidden 16/8, latent 4, a few epochs on two corpus levels each.
inline const lode::suggest::ModelSet& tiny_models() {
    static const lode::suggest::ModelSet set = [] {
        auto make = [](std::size_t first, std::uint64_t seed) {
            lode::vae::VaeConfig cfg = lode::vae::VaeConfig::desk();
            cfg.hidden_dims = {16, 8};
            cfg.latent_dim = 4;
            cfg.epochs = 4;
            cfg.seed = seed;
            std::vector<lode::Level> levels{corpus()[first].level.without_spawn(),
                                            corpus()[first + 3].level.without_spawn()};
            return std::make_shared<const lode::vae::VaeModel>(lode::vae::train(cfg, lode::augment(levels)));
        };
        return lode::suggest::ModelSet{make(1, 1), make(2, 2), make(0, 3), make(4, 4)};
    }();
    return set;
}

/// Model-free suggestions: every cell of suggestion `id` is drawn from (seed, id).
inline lode::suggest::SuggestionSet fake_set(std::uint64_t seed, int generation) {
    lode::suggest::SuggestionSet set;
    set.seed = seed;
    set.generation = generation;
    for (int id = 0; id < lode::suggest::kSuggestionCount; ++id) {
        std::mt19937_64 rng(seed * 31 + static_cast<std::uint64_t>(id));
        std::uniform_int_distribution<int> tile(0, lode::kTileKinds - 1);
        lode::Level level;
        for (int r = 0; r < lode::kLevelHeight; ++r)
            for (int c = 0; c < lode::kLevelWidth; ++c) level.set(c, r, static_cast<lode::TileKind>(tile(rng)));
        set.items.push_back({level, lode::suggest::role_of(id), lode::suggest::variance_of(id), id});
    }
    return set;
}

inline const lode::editor::SuggestionGenerator kFakeGenerator = [](const lode::Level&, std::uint64_t seed, int generation) {
    return fake_set(seed, generation);
};

/// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("lode-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace fixtures
