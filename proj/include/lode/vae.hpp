#pragma once

#include "lode/level.hpp"
#include "lode/nn/layers.hpp"
#include "lode/nn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lode::vae {

enum class LrSchedule { Multiplicative, Subtractive };

struct VaeConfig {
    std::size_t input_dim = kGridValues;
    std::size_t channels = kTileKinds;
    std::vector<std::size_t> hidden_dims = {1024, 512, 256};
    std::size_t latent_dim = 128;
    double kl_weight = 0.01;
    std::size_t batch_size = 32;
    int epochs = 10000;
    double learning_rate = 1e-3;
    double lr_decay_factor = 0.01;
    int lr_decay_every = 2500;
    LrSchedule lr_schedule = LrSchedule::Multiplicative;
    /// Batch norm after the mu/log_var head and before the decoder softmax.
    bool batchnorm_on_heads = false;
    double bn_momentum = 0.1;
    double bn_epsilon = 1e-5;
    std::uint64_t seed = 20210817;

    /// 10000 epochs, latent 128, 6468 -> 1024 -> 512 -> 256 encoder.
    static VaeConfig paper();
    /// Laptop-scale: 256/128/64 hidden, latent 32, 2000 epochs.
    static VaeConfig desk();

    void validate() const;
};

/// Learning rate used during `epoch` (0-based). Multiplicative: lr * factor^k after k completed
/// decay periods. Subtractive: lr - factor * k, floored at zero.
double learning_rate_at(const VaeConfig& config, int epoch);

struct Losses {
    double total = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double loss = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
    double learning_rate = 0.0;
};

struct TrainingInfo {
    double final_loss = 0.0;
    int epochs = 0;
    std::string dataset;
    std::vector<EpochStats> history;
};

/// Encoder: [Dense -> BatchNorm -> ReLU] x hidden, then Dense to mu || log_var.
/// Decoder: [Dense -> BatchNorm -> ReLU] x reversed hidden, then Dense -> per-tile softmax.
template <typename T>
class Vae {
public:
    explicit Vae(VaeConfig config);

    const VaeConfig& config() const { return config_; }

    struct Encoded {
        nn::BasicTensor<T> mu;
        nn::BasicTensor<T> log_var;
    };

    /// Inference mode; does not mutate the model.
    Encoded encode_batch(const nn::BasicTensor<T>& input) const;
    /// Per-tile softmax probabilities; inference mode.
    nn::BasicTensor<T> decode_batch(const nn::BasicTensor<T>& z) const;

    /// Full objective with z = mu + exp(log_var / 2) * noise. Caches activations for backward().
    Losses forward_train(const nn::BasicTensor<T>& input, const nn::BasicTensor<T>& noise,
                         nn::Mode mode = nn::Mode::Training);
    /// Accumulates gradients of the last forward_train objective.
    void backward();
    void zero_grad();

    std::vector<nn::ParamRef<T>> parameters();
    std::vector<nn::StateRef<T>> state();

    nn::Dense<T>& encoder_head() { return encoder_head_; }
    nn::Dense<T>& decoder_head() { return decoder_head_; }

    TrainingInfo info;

private:
    struct Block {
        nn::Dense<T> dense;
        nn::BatchNorm<T> norm;
        nn::Relu<T> relu;
    };

    nn::BasicTensor<T> run_encoder(const nn::BasicTensor<T>& input, nn::Mode mode);
    nn::BasicTensor<T> run_decoder_logits(const nn::BasicTensor<T>& z, nn::Mode mode);

    VaeConfig config_;
    std::vector<Block> encoder_;
    nn::Dense<T> encoder_head_;
    nn::BatchNorm<T> encoder_head_norm_;
    std::vector<Block> decoder_;
    nn::Dense<T> decoder_head_;
    nn::BatchNorm<T> decoder_head_norm_;

    nn::BasicTensor<T> input_;
    nn::BasicTensor<T> mu_;
    nn::BasicTensor<T> log_var_;
    nn::BasicTensor<T> noise_;
    nn::BasicTensor<T> probs_;
    std::size_t batch_ = 0;
};

extern template class Vae<float>;
extern template class Vae<double>;

using VaeModel = Vae<float>;

struct LatentDistribution {
    std::vector<float> mu;
    std::vector<float> log_var;
};

struct LatentVector {
    std::vector<float> z;
};

LatentDistribution encode(const VaeModel& model, const OneHotGrid& grid);
/// z = mu + exp(log_var / 2) * eps, eps ~ N(0, I).
LatentVector reparameterize(const LatentDistribution& dist, std::mt19937_64& rng);
OneHotGrid decode(const VaeModel& model, const LatentVector& z);
/// argmax(decode(mu(encode(level)))) with centered padding; spawn is not carried over.
Level reconstruct(const VaeModel& model, const Level& level);

class TrainingError : public std::runtime_error {
public:
    TrainingError(int epoch, double last_finite_loss);
    int epoch() const { return epoch_; }
    double last_finite_loss() const { return last_finite_loss_; }

private:
    int epoch_;
    double last_finite_loss_;
};

struct TrainOptions {
    std::string dataset_name;
    std::function<void(const EpochStats&)> on_epoch;
};

/// Minibatch Adam on rows of `data` (samples x input_dim). Deterministic for a fixed config.seed.
VaeModel train_on_matrix(const VaeConfig& config, const nn::Tensor& data, const TrainOptions& options = {});
VaeModel train(const VaeConfig& config, std::span<const OneHotGrid> data, const TrainOptions& options = {});

// ---------------------------------------------------------------------------
// Model container: "LEVAE001" | u32 header length | JSON header | f32 LE tensors in header order.

class ModelFormatError : public std::runtime_error {
public:
    enum class Kind { Version, Truncated, Header, Shape };
    ModelFormatError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    Kind kind() const { return kind_; }
    std::size_t expected_bytes = 0;
    std::size_t actual_bytes = 0;

private:
    Kind kind_;
};

inline constexpr std::string_view kModelMagic = "LEVAE001";

std::vector<std::uint8_t> save_model(const VaeModel& model);
VaeModel load_model(std::span<const std::uint8_t> bytes);
void save_model_file(const VaeModel& model, const std::filesystem::path& path);
VaeModel load_model_file(const std::filesystem::path& path);

}  // namespace lode::vae
