#include "lode/nn/gradcheck.hpp"
#include "lode/nn/layers.hpp"
#include "lode/nn/ops.hpp"
#include "lode/vae.hpp"

#include <doctest.h>

#include <random>

using namespace lode;
using nn::TensorD;

namespace {

TensorD random_tensor(nn::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    TensorD t(std::move(shape));
    for (auto& v : t.values()) v = dist(rng);
    return t;
}

// Random one-hot rows over `tiles` groups of 7 channels.
TensorD random_onehot(std::size_t rows, std::size_t tiles, std::mt19937_64& rng) {
    TensorD t = TensorD::matrix(rows, tiles * 7);
    std::uniform_int_distribution<int> pick(0, 6);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = 0; k < tiles; ++k) t(r, k * 7 + static_cast<std::size_t>(pick(rng))) = 1.0;
    return t;
}

vae::VaeConfig toy_config() {
    vae::VaeConfig cfg;
    cfg.input_dim = 84;
    cfg.hidden_dims = {16};
    cfg.latent_dim = 4;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("gradient check: dense layer under a quadratic loss") {
    std::mt19937_64 rng(2);
    nn::Dense<double> d(5, 3);
    d.init_he_uniform(rng);
    d.bias = random_tensor({3}, rng);
    const auto x = random_tensor({4, 5}, rng);
    const auto target = random_tensor({4, 3}, rng);
    std::vector<nn::ParamRef<double>> params;
    d.collect("dense", params);
    auto loss = [&] {
        const auto y = d.infer(x);
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) s += 0.5 * (y[i] - target[i]) * (y[i] - target[i]);
        return s;
    };
    auto backprop = [&] {
        d.zero_grad();
        auto y = d.forward(x);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] -= target[i];
        d.backward(y);
    };
    const auto report = nn::gradient_check(params, loss, backprop);
    CHECK(report.max_relative_error < 1e-8);
}

TEST_CASE("gradient check: toy VAE objective (84 inputs, hidden 16, latent 4)") {
    std::mt19937_64 rng(3);
    vae::Vae<double> model(toy_config());
    const auto x = random_onehot(6, 12, rng);
    const auto noise = random_tensor({6, 4}, rng);
    auto loss = [&] { return model.forward_train(x, noise, nn::Mode::Training).total; };
    auto backprop = [&] {
        model.zero_grad();
        model.forward_train(x, noise, nn::Mode::Training);
        model.backward();
    };
    const auto report = nn::gradient_check(model.parameters(), loss, backprop);
    INFO("worst parameter: " << report.worst_param);
    CHECK(report.max_relative_error < 1e-4);
}

TEST_CASE("gradient check: VAE with frozen batch norm") {
    std::mt19937_64 rng(4);
    auto cfg = toy_config();
    cfg.batchnorm_on_heads = true;
    vae::Vae<double> model(cfg);
    // give the running statistics non-trivial values
    for (int i = 0; i < 5; ++i) model.forward_train(random_onehot(8, 12, rng), random_tensor({8, 4}, rng));
    const auto x = random_onehot(5, 12, rng);
    const auto noise = random_tensor({5, 4}, rng);
    auto loss = [&] { return model.forward_train(x, noise, nn::Mode::Inference).total; };
    auto backprop = [&] {
        model.zero_grad();
        model.forward_train(x, noise, nn::Mode::Inference);
        model.backward();
    };
    const auto report = nn::gradient_check(model.parameters(), loss, backprop);
    INFO("worst parameter: " << report.worst_param);
    CHECK(report.max_relative_error < 1e-6);
}

TEST_CASE("KL term matches the closed form for a known encoder output") {
    // With all weights zero, mu = 0 and log_var = 0 so KL = 0 and z = noise.
    auto cfg = toy_config();
    vae::Vae<double> model(cfg);
    for (auto& p : model.parameters()) {
        if (p.name.find(".weight") != std::string::npos && p.name.find("norm") == std::string::npos) p.value->fill(0.0);
    }
    std::mt19937_64 rng(9);
    const auto losses = model.forward_train(random_onehot(4, 12, rng), random_tensor({4, 4}, rng));
    CHECK(losses.kl == doctest::Approx(0.0).epsilon(1e-12));
    // uniform decoder output: CCE per tile = log 7
    CHECK(losses.reconstruction == doctest::Approx(std::log(7.0)).epsilon(1e-9));
}
