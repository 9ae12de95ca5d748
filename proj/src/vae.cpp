#include "lode/vae.hpp"

#include "lode/nn/adam.hpp"
#include "lode/nn/ops.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace lode::vae {

using nn::BasicTensor;
using nn::Mode;

VaeConfig VaeConfig::paper() { return VaeConfig{}; }

VaeConfig VaeConfig::desk() {
    VaeConfig c;
    c.hidden_dims = {256, 128, 64};
    c.latent_dim = 32;
    c.epochs = 2000;
    return c;
}

void VaeConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("invalid VAE config: " + m); };
    if (input_dim == 0) fail("input_dim must be positive");
    if (channels == 0 || input_dim % channels != 0) fail("channels must divide input_dim");
    if (hidden_dims.empty()) fail("need at least one hidden layer");
    for (auto h : hidden_dims) {
        if (h == 0) fail("hidden widths must be positive");
    }
    if (latent_dim == 0) fail("latent_dim must be positive");
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (epochs < 1) fail("epochs must be at least 1");
    if (batch_size < 2) fail("batch_size must be at least 2 for batch norm");
    if (kl_weight < 0.0) fail("kl_weight must be non-negative");
    if (lr_decay_every < 1) fail("lr_decay_every must be positive");
}

double learning_rate_at(const VaeConfig& config, int epoch) {
    const int periods = epoch / config.lr_decay_every;
    if (config.lr_schedule == LrSchedule::Multiplicative) {
        return config.learning_rate * std::pow(config.lr_decay_factor, periods);
    }
    return std::max(0.0, config.learning_rate - config.lr_decay_factor * periods);
}

// ---------------------------------------------------------------------------

template <typename T>
Vae<T>::Vae(VaeConfig config) : config_(std::move(config)) {
    config_.validate();
    std::mt19937_64 rng(config_.seed);
    std::size_t width = config_.input_dim;
    for (auto h : config_.hidden_dims) {
        Block b{nn::Dense<T>(width, h), nn::BatchNorm<T>(h, config_.bn_momentum, config_.bn_epsilon), {}};
        b.dense.init_he_uniform(rng);
        encoder_.push_back(std::move(b));
        width = h;
    }
    encoder_head_ = nn::Dense<T>(width, 2 * config_.latent_dim);
    encoder_head_.init_he_uniform(rng);
    encoder_head_norm_ = nn::BatchNorm<T>(2 * config_.latent_dim, config_.bn_momentum, config_.bn_epsilon);

    width = config_.latent_dim;
    for (auto it = config_.hidden_dims.rbegin(); it != config_.hidden_dims.rend(); ++it) {
        Block b{nn::Dense<T>(width, *it), nn::BatchNorm<T>(*it, config_.bn_momentum, config_.bn_epsilon), {}};
        b.dense.init_he_uniform(rng);
        decoder_.push_back(std::move(b));
        width = *it;
    }
    decoder_head_ = nn::Dense<T>(width, config_.input_dim);
    decoder_head_.init_he_uniform(rng);
    decoder_head_norm_ = nn::BatchNorm<T>(config_.input_dim, config_.bn_momentum, config_.bn_epsilon);
}

template <typename T>
typename Vae<T>::Encoded Vae<T>::encode_batch(const BasicTensor<T>& input) const {
    if (input.cols() != config_.input_dim) {
        throw nn::DimensionError("encoder input", input.shape(), nn::Shape{input.rows(), config_.input_dim});
    }
    BasicTensor<T> h = input;
    for (const auto& b : encoder_) h = nn::Relu<T>::infer(b.norm.infer(b.dense.infer(h)));
    h = encoder_head_.infer(h);
    if (config_.batchnorm_on_heads) h = encoder_head_norm_.infer(h);
    const std::size_t n = h.rows();
    const std::size_t d = config_.latent_dim;
    Encoded out{BasicTensor<T>::matrix(n, d), BasicTensor<T>::matrix(n, d)};
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) {
            out.mu(r, j) = h(r, j);
            out.log_var(r, j) = h(r, d + j);
        }
    }
    return out;
}

template <typename T>
BasicTensor<T> Vae<T>::decode_batch(const BasicTensor<T>& z) const {
    if (z.cols() != config_.latent_dim) {
        throw nn::DimensionError("decoder input", z.shape(), nn::Shape{z.rows(), config_.latent_dim});
    }
    BasicTensor<T> h = z;
    for (const auto& b : decoder_) h = nn::Relu<T>::infer(b.norm.infer(b.dense.infer(h)));
    h = decoder_head_.infer(h);
    if (config_.batchnorm_on_heads) h = decoder_head_norm_.infer(h);
    return nn::softmax_groups(h, config_.channels);
}

template <typename T>
BasicTensor<T> Vae<T>::run_encoder(const BasicTensor<T>& input, Mode mode) {
    BasicTensor<T> h = input;
    for (auto& b : encoder_) h = b.relu.forward(b.norm.forward(b.dense.forward(h), mode));
    h = encoder_head_.forward(h);
    if (config_.batchnorm_on_heads) h = encoder_head_norm_.forward(h, mode);
    return h;
}

template <typename T>
BasicTensor<T> Vae<T>::run_decoder_logits(const BasicTensor<T>& z, Mode mode) {
    BasicTensor<T> h = z;
    for (auto& b : decoder_) h = b.relu.forward(b.norm.forward(b.dense.forward(h), mode));
    h = decoder_head_.forward(h);
    if (config_.batchnorm_on_heads) h = decoder_head_norm_.forward(h, mode);
    return h;
}

template <typename T>
Losses Vae<T>::forward_train(const BasicTensor<T>& input, const BasicTensor<T>& noise, Mode mode) {
    const std::size_t n = input.rows();
    const std::size_t d = config_.latent_dim;
    if (input.cols() != config_.input_dim) {
        throw nn::DimensionError("encoder input", input.shape(), nn::Shape{n, config_.input_dim});
    }
    if (noise.rows() != n || noise.cols() != d) throw nn::DimensionError("latent noise", noise.shape(), nn::Shape{n, d});
    input_ = input;
    noise_ = noise;
    batch_ = n;

    const auto head = run_encoder(input, mode);
    mu_ = BasicTensor<T>::matrix(n, d);
    log_var_ = BasicTensor<T>::matrix(n, d);
    auto z = BasicTensor<T>::matrix(n, d);
    double kl = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) {
            const double mu = head(r, j);
            const double lv = head(r, d + j);
            mu_(r, j) = static_cast<T>(mu);
            log_var_(r, j) = static_cast<T>(lv);
            z(r, j) = static_cast<T>(mu + std::exp(0.5 * lv) * noise(r, j));
            kl += -0.5 * (1.0 + lv - mu * mu - std::exp(lv));
        }
    }
    kl /= static_cast<double>(n);

    probs_ = nn::softmax_groups(run_decoder_logits(z, mode), config_.channels);
    Losses out;
    out.reconstruction = nn::cce_loss(probs_, input, config_.channels);
    out.kl = kl;
    out.total = out.reconstruction + config_.kl_weight * kl;
    return out;
}

template <typename T>
void Vae<T>::backward() {
    const std::size_t n = batch_;
    const std::size_t d = config_.latent_dim;
    auto g = nn::softmax_cce_backward(probs_, input_, config_.channels);
    if (config_.batchnorm_on_heads) g = decoder_head_norm_.backward(g);
    g = decoder_head_.backward(g);
    for (auto it = decoder_.rbegin(); it != decoder_.rend(); ++it) {
        g = it->dense.backward(it->norm.backward(it->relu.backward(std::move(g))));
    }
    // g is dL/dz.
    auto head_grad = BasicTensor<T>::matrix(n, 2 * d);
    const double kl_scale = config_.kl_weight / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) {
            const double mu = mu_(r, j);
            const double lv = log_var_(r, j);
            const double dz = g(r, j);
            const double sigma = std::exp(0.5 * lv);
            head_grad(r, j) = static_cast<T>(dz + kl_scale * mu);
            head_grad(r, d + j) = static_cast<T>(dz * noise_(r, j) * 0.5 * sigma + kl_scale * 0.5 * (std::exp(lv) - 1.0));
        }
    }
    g = std::move(head_grad);
    if (config_.batchnorm_on_heads) g = encoder_head_norm_.backward(g);
    g = encoder_head_.backward(g);
    for (std::size_t i = encoder_.size(); i-- > 0;) {
        auto& b = encoder_[i];
        // The input gradient of the first layer is never needed.
        g = b.dense.backward(b.norm.backward(b.relu.backward(std::move(g))), i > 0);
    }
}

template <typename T>
void Vae<T>::zero_grad() {
    for (auto& p : parameters()) p.grad->fill(T{0});
}

template <typename T>
std::vector<nn::ParamRef<T>> Vae<T>::parameters() {
    std::vector<nn::ParamRef<T>> out;
    for (std::size_t i = 0; i < encoder_.size(); ++i) {
        encoder_[i].dense.collect("encoder." + std::to_string(i) + ".dense", out);
        encoder_[i].norm.collect("encoder." + std::to_string(i) + ".norm", out);
    }
    encoder_head_.collect("encoder.head", out);
    if (config_.batchnorm_on_heads) encoder_head_norm_.collect("encoder.head_norm", out);
    for (std::size_t i = 0; i < decoder_.size(); ++i) {
        decoder_[i].dense.collect("decoder." + std::to_string(i) + ".dense", out);
        decoder_[i].norm.collect("decoder." + std::to_string(i) + ".norm", out);
    }
    decoder_head_.collect("decoder.head", out);
    if (config_.batchnorm_on_heads) decoder_head_norm_.collect("decoder.head_norm", out);
    return out;
}

template <typename T>
std::vector<nn::StateRef<T>> Vae<T>::state() {
    std::vector<nn::StateRef<T>> out;
    for (std::size_t i = 0; i < encoder_.size(); ++i) {
        encoder_[i].dense.collect_state("encoder." + std::to_string(i) + ".dense", out);
        encoder_[i].norm.collect_state("encoder." + std::to_string(i) + ".norm", out);
    }
    encoder_head_.collect_state("encoder.head", out);
    if (config_.batchnorm_on_heads) encoder_head_norm_.collect_state("encoder.head_norm", out);
    for (std::size_t i = 0; i < decoder_.size(); ++i) {
        decoder_[i].dense.collect_state("decoder." + std::to_string(i) + ".dense", out);
        decoder_[i].norm.collect_state("decoder." + std::to_string(i) + ".norm", out);
    }
    decoder_head_.collect_state("decoder.head", out);
    if (config_.batchnorm_on_heads) decoder_head_norm_.collect_state("decoder.head_norm", out);
    return out;
}

template class Vae<float>;
template class Vae<double>;

// ---------------------------------------------------------------------------

LatentDistribution encode(const VaeModel& model, const OneHotGrid& grid) {
    if (grid.values.size() != model.config().input_dim) {
        throw nn::DimensionError("grid does not match model input", nn::Shape{grid.values.size()},
                                 nn::Shape{model.config().input_dim});
    }
    const auto out = model.encode_batch(nn::Tensor(nn::Shape{1, grid.values.size()}, grid.values));
    return {std::vector<float>(out.mu.values().begin(), out.mu.values().end()),
            std::vector<float>(out.log_var.values().begin(), out.log_var.values().end())};
}

LatentVector reparameterize(const LatentDistribution& dist, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    LatentVector out{std::vector<float>(dist.mu.size())};
    for (std::size_t i = 0; i < dist.mu.size(); ++i) {
        out.z[i] = static_cast<float>(dist.mu[i] + std::exp(0.5 * static_cast<double>(dist.log_var[i])) * normal(rng));
    }
    return out;
}

OneHotGrid decode(const VaeModel& model, const LatentVector& z) {
    if (model.config().input_dim != kGridValues) {
        throw nn::DimensionError("model output is not a level grid", nn::Shape{model.config().input_dim},
                                 nn::Shape{kGridValues});
    }
    const auto probs = model.decode_batch(nn::Tensor(nn::Shape{1, z.z.size()}, z.z));
    OneHotGrid grid;
    std::copy(probs.values().begin(), probs.values().end(), grid.values.begin());
    return grid;
}

Level reconstruct(const VaeModel& model, const Level& level) {
    const auto dist = encode(model, encode_onehot(level, kCenterPad));
    return decode_onehot(decode(model, LatentVector{dist.mu}), kCenterPad);
}

// ---------------------------------------------------------------------------

TrainingError::TrainingError(int epoch, double last_finite_loss)
    : std::runtime_error("training loss became non-finite at epoch " + std::to_string(epoch) +
                         " (last finite loss " + std::to_string(last_finite_loss) + ")"),
      epoch_(epoch),
      last_finite_loss_(last_finite_loss) {}

VaeModel train_on_matrix(const VaeConfig& config, const nn::Tensor& data, const TrainOptions& options) {
    config.validate();
    if (data.rows() == 0) throw std::invalid_argument("training data is empty");
    if (data.cols() != config.input_dim) {
        throw nn::DimensionError("training data width", data.shape(), nn::Shape{data.rows(), config.input_dim});
    }
    if (data.rows() < 2) throw std::invalid_argument("training needs at least 2 samples for batch norm");

    VaeModel model(config);
    model.info.dataset = options.dataset_name;
    nn::Adam<float> adam(nn::AdamConfig{config.learning_rate});
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);

    const std::size_t samples = data.rows();
    const std::size_t width = data.cols();
    std::vector<std::size_t> order(samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto params = model.parameters();

    // A trailing batch of one row is merged into the previous batch.
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < samples; start += config.batch_size) {
        const std::size_t end = std::min(samples, start + config.batch_size);
        if (end - start < 2 && !batches.empty()) {
            batches.back().second = end;
        } else {
            batches.emplace_back(start, end);
        }
    }

    double last_finite = 0.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = learning_rate_at(config, epoch);
        adam.set_learning_rate(lr);
        std::shuffle(order.begin(), order.end(), rng);
        Losses sum;
        for (const auto& [start, end] : batches) {
            const std::size_t n = end - start;
            auto x = nn::Tensor::matrix(n, width);
            for (std::size_t r = 0; r < n; ++r) {
                const auto src = data.row(order[start + r]);
                std::copy(src.begin(), src.end(), x.row(r).begin());
            }
            auto eps = nn::Tensor::matrix(n, config.latent_dim);
            for (auto& e : eps.values()) e = static_cast<float>(normal(rng));
            model.zero_grad();
            const auto losses = model.forward_train(x, eps);
            if (!std::isfinite(losses.total)) throw TrainingError(epoch + 1, last_finite);
            model.backward();
            try {
                adam.step(params);
            } catch (const nn::NonFiniteGradientError&) {
                throw TrainingError(epoch + 1, last_finite);
            }
            const double w = static_cast<double>(n) / static_cast<double>(samples);
            sum.total += losses.total * w;
            sum.reconstruction += losses.reconstruction * w;
            sum.kl += losses.kl * w;
        }
        if (!std::isfinite(sum.total)) throw TrainingError(epoch + 1, last_finite);
        last_finite = sum.total;
        EpochStats stats{epoch + 1, sum.total, sum.reconstruction, sum.kl, lr};
        model.info.history.push_back(stats);
        if (options.on_epoch) options.on_epoch(stats);
    }
    model.info.epochs = config.epochs;
    model.info.final_loss = last_finite;
    return model;
}

VaeModel train(const VaeConfig& config, std::span<const OneHotGrid> data, const TrainOptions& options) {
    if (data.empty()) throw std::invalid_argument("training data is empty");
    auto matrix = nn::Tensor::matrix(data.size(), config.input_dim);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].values.size() != config.input_dim) {
            throw nn::DimensionError("training grid", nn::Shape{data[i].values.size()}, nn::Shape{config.input_dim});
        }
        std::copy(data[i].values.begin(), data[i].values.end(), matrix.row(i).begin());
    }
    return train_on_matrix(config, matrix, options);
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json config_to_json(const VaeConfig& c) {
    return {
        {"input_dim", c.input_dim},
        {"channels", c.channels},
        {"hidden_dims", c.hidden_dims},
        {"latent_dim", c.latent_dim},
        {"kl_weight", c.kl_weight},
        {"batch_size", c.batch_size},
        {"epochs", c.epochs},
        {"learning_rate", c.learning_rate},
        {"lr_decay_factor", c.lr_decay_factor},
        {"lr_decay_every", c.lr_decay_every},
        {"lr_schedule", c.lr_schedule == LrSchedule::Multiplicative ? "multiplicative" : "subtractive"},
        {"batchnorm_on_heads", c.batchnorm_on_heads},
        {"bn_momentum", c.bn_momentum},
        {"bn_epsilon", c.bn_epsilon},
        {"seed", c.seed},
    };
}

VaeConfig config_from_json(const nlohmann::json& j) {
    VaeConfig c;
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.channels = j.at("channels").get<std::size_t>();
    c.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.kl_weight = j.at("kl_weight").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.lr_decay_factor = j.at("lr_decay_factor").get<double>();
    c.lr_decay_every = j.at("lr_decay_every").get<int>();
    c.lr_schedule = j.at("lr_schedule").get<std::string>() == "subtractive" ? LrSchedule::Subtractive
                                                                           : LrSchedule::Multiplicative;
    c.batchnorm_on_heads = j.at("batchnorm_on_heads").get<bool>();
    c.bn_momentum = j.at("bn_momentum").get<double>();
    c.bn_epsilon = j.at("bn_epsilon").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace

std::vector<std::uint8_t> save_model(const VaeModel& model) {
    // state() hands out mutable views; nothing is written through them here.
    auto tensors = const_cast<VaeModel&>(model).state();
    nlohmann::json header;
    header["format"] = 1;
    header["tile_count"] = model.config().channels;
    header["config"] = config_to_json(model.config());
    header["training"] = {{"final_loss", model.info.final_loss},
                          {"epochs", model.info.epochs},
                          {"dataset", model.info.dataset}};
    nlohmann::json list = nlohmann::json::array();
    for (const auto& t : tensors) list.push_back({{"name", t.name}, {"shape", t.value->shape()}});
    header["tensors"] = list;
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(kModelMagic.begin(), kModelMagic.end());
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& t : tensors) {
        for (const float v : t.value->values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

VaeModel load_model(std::span<const std::uint8_t> bytes) {
    using Kind = ModelFormatError::Kind;
    auto truncated = [&](std::size_t expected) {
        ModelFormatError e(Kind::Truncated, "model container truncated: expected " + std::to_string(expected) +
                                                " bytes, got " + std::to_string(bytes.size()));
        e.expected_bytes = expected;
        e.actual_bytes = bytes.size();
        return e;
    };
    const std::size_t prefix = kModelMagic.size() + 4;
    if (bytes.size() < kModelMagic.size() ||
        std::memcmp(bytes.data(), kModelMagic.data(), kModelMagic.size()) != 0) {
        throw ModelFormatError(Kind::Version, "not a LEVAE001 model container (bad magic or version)");
    }
    if (bytes.size() < prefix) throw truncated(prefix);
    const std::uint32_t header_len = get_u32(bytes.data() + kModelMagic.size());
    if (bytes.size() < prefix + header_len) throw truncated(prefix + header_len);

    nlohmann::json header;
    VaeConfig config;
    try {
        header = nlohmann::json::parse(bytes.begin() + prefix, bytes.begin() + prefix + header_len);
        config = config_from_json(header.at("config"));
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(Kind::Header, std::string("bad model header: ") + e.what());
    }
    if (header.value("tile_count", std::size_t{0}) != config.channels) {
        throw ModelFormatError(Kind::Shape, "tile count does not match config channels");
    }
    VaeModel model = [&] {
        try {
            return VaeModel(config);
        } catch (const std::invalid_argument& e) {
            throw ModelFormatError(Kind::Shape, std::string("inconsistent model config: ") + e.what());
        }
    }();
    auto tensors = model.state();
    const auto& listed = header.at("tensors");
    if (listed.size() != tensors.size()) {
        throw ModelFormatError(Kind::Shape, "header lists " + std::to_string(listed.size()) + " tensors, config implies " +
                                                std::to_string(tensors.size()));
    }
    std::size_t expected = prefix + header_len;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto name = listed[i].at("name").get<std::string>();
        const auto shape = listed[i].at("shape").get<nn::Shape>();
        if (name != tensors[i].name || shape != tensors[i].value->shape()) {
            throw ModelFormatError(Kind::Shape, "tensor " + std::to_string(i) + " is " + name + nn::shape_string(shape) +
                                                    ", expected " + tensors[i].name +
                                                    nn::shape_string(tensors[i].value->shape()));
        }
        expected += 4 * tensors[i].value->size();
    }
    if (bytes.size() < expected) throw truncated(expected);
    if (bytes.size() > expected) {
        throw ModelFormatError(Kind::Shape, "model container has " + std::to_string(bytes.size() - expected) +
                                                " trailing bytes");
    }
    const std::uint8_t* p = bytes.data() + prefix + header_len;
    for (auto& t : tensors) {
        for (auto& v : t.value->values()) {
            v = std::bit_cast<float>(get_u32(p));
            p += 4;
        }
    }
    const auto& training = header.at("training");
    model.info.final_loss = training.value("final_loss", 0.0);
    model.info.epochs = training.value("epochs", 0);
    model.info.dataset = training.value("dataset", std::string{});
    return model;
}

void save_model_file(const VaeModel& model, const std::filesystem::path& path) {
    const auto bytes = save_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

VaeModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_model(bytes);
}

}  // namespace lode::vae
