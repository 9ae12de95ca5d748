#include "lode/suggest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace lode::suggest {

std::string_view role_name(ModelRole role) {
    switch (role) {
        case ModelRole::Platform: return "Platform";
        case ModelRole::Ladder: return "Ladder";
        case ModelRole::Gold: return "Gold";
    }
    return "?";
}

std::string_view variance_name(Variance variance) { return variance == Variance::Low ? "Low" : "High"; }

std::vector<float> uniform_noise(std::mt19937_64& rng, std::size_t n, double bound, bool open_lower) {
    std::vector<float> out(n, 0.0f);
    if (bound <= 0.0) return out;
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : out) {
        double u = dist(rng);
        // Rounding can land on either endpoint; redraw to keep the interval half-open (or open).
        while (u >= bound || (open_lower && u <= -bound)) u = dist(rng);
        float f = static_cast<float>(u);
        if (f >= static_cast<float>(bound)) f = std::nextafter(static_cast<float>(bound), 0.0f);
        if (open_lower && f <= static_cast<float>(-bound)) f = std::nextafter(static_cast<float>(-bound), 0.0f);
        v = f;
    }
    return out;
}

namespace {

void check_level(const vae::VaeModel& model, const Level& level) {
    if (!level.is_standard_size()) throw LevelError("suggestions need a 32x22 level");
    if (model.config().input_dim != kGridValues) {
        throw nn::DimensionError("model does not take level grids", nn::Shape{model.config().input_dim},
                                 nn::Shape{kGridValues});
    }
}

std::vector<float> latent_of(const vae::VaeModel& model, const Level& level, int left_pad) {
    return vae::encode(model, encode_onehot(level, left_pad)).mu;
}

Level decode_level(const vae::VaeModel& model, std::vector<float> z, int left_pad) {
    return decode_onehot(vae::decode(model, vae::LatentVector{std::move(z)}), left_pad);
}

void add(std::vector<float>& z, const std::vector<float>& noise) {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += noise[i];
}

}  // namespace

Suggestion suggest_low(const vae::VaeModel& model, ModelRole role, const Level& current, std::mt19937_64& rng,
                       const SuggestionConfig& config) {
    check_level(model, current);
    auto z = latent_of(model, current, config.left_pad);
    add(z, uniform_noise(rng, z.size(), config.low_bound));
    return {decode_level(model, std::move(z), config.left_pad), role, Variance::Low, suggestion_id(role, Variance::Low)};
}

Suggestion suggest_high(const vae::VaeModel& model, ModelRole role, const Level& current, std::mt19937_64& rng,
                        const SuggestionConfig& config) {
    check_level(model, current);
    const int passes = std::max(1, config.high_iterations);
    auto z = latent_of(model, current, config.left_pad);
    Level out;
    if (config.high_mode == HighVarianceMode::SingleShot) {
        for (int i = 0; i < passes; ++i) add(z, uniform_noise(rng, z.size(), config.high_bound, true));
        out = decode_level(model, std::move(z), config.left_pad);
    } else {
        for (int i = 0; i < passes; ++i) {
            add(z, uniform_noise(rng, z.size(), config.high_bound, true));
            out = decode_level(model, z, config.left_pad);
            if (i + 1 < passes) z = latent_of(model, out, config.left_pad);
        }
    }
    return {std::move(out), role, Variance::High, suggestion_id(role, Variance::High)};
}

const vae::VaeModel& ModelSet::themed(ModelRole role) const {
    const auto& ptr = role == ModelRole::Platform ? platform : role == ModelRole::Ladder ? ladder : gold;
    if (!ptr) throw std::runtime_error("missing VAE-" + std::string(role_name(role)) + " model");
    return *ptr;
}

std::string model_file_name(Theme theme) {
    std::string name(theme_name(theme));
    for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return "vae-" + name + ".levae";
}

ModelSet load_model_set(const std::filesystem::path& dir) {
    auto load = [&](Theme t) {
        const auto path = dir / model_file_name(t);
        if (!std::filesystem::exists(path)) throw std::runtime_error("model file not found: " + path.string());
        return std::make_shared<const vae::VaeModel>(vae::load_model_file(path));
    };
    return {load(Theme::Platform), load(Theme::Ladder), load(Theme::Gold), load(Theme::All)};
}

std::mt19937_64 suggestion_rng(std::uint64_t set_seed, int id) {
    std::seed_seq seq{static_cast<std::uint32_t>(set_seed), static_cast<std::uint32_t>(set_seed >> 32),
                      static_cast<std::uint32_t>(id)};
    return std::mt19937_64(seq);
}

SuggestionSet generate_set(const ModelSet& models, const Level& current, std::uint64_t seed, int generation,
                           const SuggestionConfig& config) {
    SuggestionSet set;
    set.seed = seed;
    set.generation = generation;
    const Level input = current.without_spawn();
    for (const auto role : {ModelRole::Platform, ModelRole::Ladder, ModelRole::Gold}) {
        const auto& model = models.themed(role);
        auto low_rng = suggestion_rng(seed, suggestion_id(role, Variance::Low));
        set.items.push_back(suggest_low(model, role, input, low_rng, config));
        auto high_rng = suggestion_rng(seed, suggestion_id(role, Variance::High));
        set.items.push_back(suggest_high(model, role, input, high_rng, config));
    }
    return set;
}

}  // namespace lode::suggest
