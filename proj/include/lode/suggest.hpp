#pragma once

#include "lode/level.hpp"
#include "lode/vae.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string_view>
#include <vector>

namespace lode::suggest {

/// Display-grid rows, top to bottom.
enum class ModelRole { Platform = 0, Ladder = 1, Gold = 2 };
/// Display-grid columns, left to right.
enum class Variance { Low = 0, High = 1 };

inline constexpr int kSuggestionCount = 6;

constexpr int suggestion_id(ModelRole role, Variance variance) {
    return static_cast<int>(role) * 2 + static_cast<int>(variance);
}
constexpr ModelRole role_of(int id) { return static_cast<ModelRole>(id / 2); }
constexpr Variance variance_of(int id) { return static_cast<Variance>(id % 2); }
constexpr bool valid_suggestion_id(int id) { return id >= 0 && id < kSuggestionCount; }

std::string_view role_name(ModelRole role);
std::string_view variance_name(Variance variance);

struct Suggestion {
    Level level;
    ModelRole source = ModelRole::Platform;
    Variance variance = Variance::Low;
    int id = 0;

    friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

struct SuggestionSet {
    std::vector<Suggestion> items;  // indexed by suggestion id
    std::uint64_t seed = 0;
    int generation = 0;

    const Suggestion& at(int id) const { return items.at(static_cast<std::size_t>(id)); }
    friend bool operator==(const SuggestionSet&, const SuggestionSet&) = default;
};

enum class HighVarianceMode {
    /// Noise, decode, re-encode the decoded level, repeated.
    Iterated,
    /// Accumulate every noise draw on the original latent, decode once.
    SingleShot,
};

struct SuggestionConfig {
    double low_bound = 0.005;
    double high_bound = 0.5;
    /// Number of noise injections for the high-variance suggestion; 0 behaves like 1.
    int high_iterations = 10;
    HighVarianceMode high_mode = HighVarianceMode::Iterated;
    int left_pad = kCenterPad;
};

/// Per-dimension uniform noise in [-bound, bound) (or (-bound, bound) when `open_lower`).
std::vector<float> uniform_noise(std::mt19937_64& rng, std::size_t n, double bound, bool open_lower = false);

Suggestion suggest_low(const vae::VaeModel& model, ModelRole role, const Level& current, std::mt19937_64& rng,
                       const SuggestionConfig& config = {});
Suggestion suggest_high(const vae::VaeModel& model, ModelRole role, const Level& current, std::mt19937_64& rng,
                        const SuggestionConfig& config = {});

/// The four trained models. Loaded models are immutable and shared across sessions.
struct ModelSet {
    std::shared_ptr<const vae::VaeModel> platform;
    std::shared_ptr<const vae::VaeModel> ladder;
    std::shared_ptr<const vae::VaeModel> gold;
    std::shared_ptr<const vae::VaeModel> all;

    const vae::VaeModel& themed(ModelRole role) const;
};

/// File name of a theme's container inside a model directory, e.g. "vae-platform.levae".
std::string model_file_name(Theme theme);
/// Throws std::runtime_error naming the first missing file.
ModelSet load_model_set(const std::filesystem::path& dir);

/// Independent generator for one cell of the grid, derived from the set seed.
std::mt19937_64 suggestion_rng(std::uint64_t set_seed, int id);

/// Rows Platform, Ladder, Gold; columns Low, High.
SuggestionSet generate_set(const ModelSet& models, const Level& current, std::uint64_t seed, int generation,
                           const SuggestionConfig& config = {});

}  // namespace lode::suggest
