#pragma once

#include "lode/nn/linalg.hpp"
#include "lode/nn/tensor.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lode::nn {

enum class Mode { Training, Inference };

/// Trainable tensor paired with its gradient accumulator. Views into a layer; the layer must outlive it.
template <typename T>
struct ParamRef {
    std::string name;
    BasicTensor<T>* value;
    BasicTensor<T>* grad;
};

/// Persistent tensor (parameter or running statistic) as it appears in a model container.
template <typename T>
struct StateRef {
    std::string name;
    BasicTensor<T>* value;
};

/// Fully-connected layer, y = x W^T + b over batch rows.
template <typename T>
class Dense {
public:
    Dense() = default;
    Dense(std::size_t in_features, std::size_t out_features)
        : weight(Shape{out_features, in_features}),
          bias(Shape{out_features}),
          weight_grad(Shape{out_features, in_features}),
          bias_grad(Shape{out_features}) {}

    std::size_t in_features() const { return weight.cols(); }
    std::size_t out_features() const { return weight.rows(); }

    /// Uniform in +-sqrt(6 / fan_in); bias zeroed.
    template <typename Rng>
    void init_he_uniform(Rng& rng) {
        const double bound = std::sqrt(6.0 / static_cast<double>(in_features()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& w : weight.values()) w = static_cast<T>(dist(rng));
        bias.fill(T{0});
    }

    BasicTensor<T> infer(const BasicTensor<T>& input) const {
        if (input.cols() != in_features()) {
            throw DimensionError("dense input width", input.shape(), weight.shape());
        }
        auto out = linalg::matmul_nt(input, weight);
        for (std::size_t r = 0; r < out.rows(); ++r) {
            auto row = out.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
        }
        return out;
    }

    BasicTensor<T> forward(const BasicTensor<T>& input) {
        auto out = infer(input);
        cached_input_ = input;
        return out;
    }

    /// Accumulates parameter gradients and returns dL/dinput (empty when `input_grad` is false).
    BasicTensor<T> backward(const BasicTensor<T>& grad_out, bool input_grad = true) {
        if (grad_out.rows() != cached_input_.rows() || grad_out.cols() != out_features()) {
            throw DimensionError("dense backward gradient", grad_out.shape(), Shape{cached_input_.rows(), out_features()});
        }
        linalg::view(weight_grad).noalias() += linalg::view(grad_out).transpose() * linalg::view(cached_input_);
        for (std::size_t r = 0; r < grad_out.rows(); ++r) {
            const auto row = grad_out.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) bias_grad[c] += row[c];
        }
        if (!input_grad) return {};
        return linalg::matmul_nn(grad_out, weight);
    }

    void zero_grad() {
        weight_grad.fill(T{0});
        bias_grad.fill(T{0});
    }

    void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".weight", &weight, &weight_grad});
        out.push_back({prefix + ".bias", &bias, &bias_grad});
    }

    void collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) {
        out.push_back({prefix + ".weight", &weight});
        out.push_back({prefix + ".bias", &bias});
    }

    BasicTensor<T> weight;
    BasicTensor<T> bias;
    BasicTensor<T> weight_grad;
    BasicTensor<T> bias_grad;

private:
    BasicTensor<T> cached_input_;
};

class BatchSizeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Per-feature batch normalization with affine gamma/beta and running statistics.
template <typename T>
class BatchNorm {
public:
    BatchNorm() = default;
    explicit BatchNorm(std::size_t features, double momentum = 0.1, double epsilon = 1e-5)
        : gamma(Shape{features}, T{1}),
          beta(Shape{features}),
          gamma_grad(Shape{features}),
          beta_grad(Shape{features}),
          running_mean(Shape{features}),
          running_var(Shape{features}, T{1}),
          momentum(momentum),
          epsilon(epsilon) {
        if (!(epsilon > 0.0)) throw std::invalid_argument("batch norm epsilon must be positive");
    }

    std::size_t features() const { return gamma.size(); }

    BasicTensor<T> infer(const BasicTensor<T>& input) const {
        check_width(input);
        BasicTensor<T> out(input.shape());
        const std::size_t n = input.rows();
        const std::size_t f = features();
        for (std::size_t c = 0; c < f; ++c) {
            const double inv_std = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + epsilon);
            const double mean = running_mean[c];
            for (std::size_t r = 0; r < n; ++r) {
                const double x_hat = (static_cast<double>(input(r, c)) - mean) * inv_std;
                out(r, c) = static_cast<T>(x_hat * gamma[c] + beta[c]);
            }
        }
        return out;
    }

    BasicTensor<T> forward(const BasicTensor<T>& input, Mode mode) {
        check_width(input);
        mode_ = mode;
        const std::size_t n = input.rows();
        const std::size_t f = features();
        x_hat_ = BasicTensor<T>(input.shape());
        inv_std_.assign(f, 0.0);
        if (mode == Mode::Inference) {
            for (std::size_t c = 0; c < f; ++c) {
                inv_std_[c] = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + epsilon);
                for (std::size_t r = 0; r < n; ++r) {
                    x_hat_(r, c) = static_cast<T>((static_cast<double>(input(r, c)) - running_mean[c]) * inv_std_[c]);
                }
            }
        } else {
            if (n < 2) {
                throw BatchSizeError("batch norm in training mode needs a batch of at least 2 rows, got " +
                                     std::to_string(n));
            }
            for (std::size_t c = 0; c < f; ++c) {
                double mean = 0.0;
                for (std::size_t r = 0; r < n; ++r) mean += input(r, c);
                mean /= static_cast<double>(n);
                double var = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    const double d = input(r, c) - mean;
                    var += d * d;
                }
                var /= static_cast<double>(n);
                inv_std_[c] = 1.0 / std::sqrt(var + epsilon);
                for (std::size_t r = 0; r < n; ++r) {
                    x_hat_(r, c) = static_cast<T>((static_cast<double>(input(r, c)) - mean) * inv_std_[c]);
                }
                const double unbiased = var * static_cast<double>(n) / static_cast<double>(n - 1);
                running_mean[c] = static_cast<T>((1.0 - momentum) * running_mean[c] + momentum * mean);
                running_var[c] = static_cast<T>((1.0 - momentum) * running_var[c] + momentum * unbiased);
            }
        }
        BasicTensor<T> out(input.shape());
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < f; ++c) out(r, c) = x_hat_(r, c) * gamma[c] + beta[c];
        }
        return out;
    }

    BasicTensor<T> backward(const BasicTensor<T>& grad_out) {
        if (!grad_out.same_shape(x_hat_)) throw DimensionError("batch norm backward", grad_out.shape(), x_hat_.shape());
        const std::size_t n = grad_out.rows();
        const std::size_t f = features();
        BasicTensor<T> grad_in(grad_out.shape());
        for (std::size_t c = 0; c < f; ++c) {
            double sum_dy = 0.0;
            double sum_dy_xhat = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                sum_dy += grad_out(r, c);
                sum_dy_xhat += static_cast<double>(grad_out(r, c)) * x_hat_(r, c);
            }
            gamma_grad[c] += static_cast<T>(sum_dy_xhat);
            beta_grad[c] += static_cast<T>(sum_dy);
            const double g = gamma[c];
            if (mode_ == Mode::Inference) {
                for (std::size_t r = 0; r < n; ++r) grad_in(r, c) = static_cast<T>(grad_out(r, c) * g * inv_std_[c]);
            } else {
                // dx = gamma * inv_std / n * (n*dy - sum(dy) - x_hat * sum(dy * x_hat))
                const double scale = g * inv_std_[c] / static_cast<double>(n);
                for (std::size_t r = 0; r < n; ++r) {
                    const double dy = grad_out(r, c);
                    grad_in(r, c) = static_cast<T>(scale * (static_cast<double>(n) * dy - sum_dy - x_hat_(r, c) * sum_dy_xhat));
                }
            }
        }
        return grad_in;
    }

    void zero_grad() {
        gamma_grad.fill(T{0});
        beta_grad.fill(T{0});
    }

    void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".gamma", &gamma, &gamma_grad});
        out.push_back({prefix + ".beta", &beta, &beta_grad});
    }

    void collect_state(const std::string& prefix, std::vector<StateRef<T>>& out) {
        out.push_back({prefix + ".gamma", &gamma});
        out.push_back({prefix + ".beta", &beta});
        out.push_back({prefix + ".running_mean", &running_mean});
        out.push_back({prefix + ".running_var", &running_var});
    }

    BasicTensor<T> gamma;
    BasicTensor<T> beta;
    BasicTensor<T> gamma_grad;
    BasicTensor<T> beta_grad;
    BasicTensor<T> running_mean;
    BasicTensor<T> running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;

private:
    void check_width(const BasicTensor<T>& input) const {
        if (input.cols() != features()) throw DimensionError("batch norm input width", input.shape(), gamma.shape());
    }

    Mode mode_ = Mode::Inference;
    BasicTensor<T> x_hat_;
    std::vector<double> inv_std_;
};

template <typename T>
class Relu {
public:
    static BasicTensor<T> infer(BasicTensor<T> input) {
        for (auto& v : input.values()) v = v > T{0} ? v : T{0};
        return input;
    }

    BasicTensor<T> forward(const BasicTensor<T>& input) {
        auto out = infer(input);
        cached_output_ = out;
        return out;
    }

    BasicTensor<T> backward(BasicTensor<T> grad_out) const {
        if (!grad_out.same_shape(cached_output_)) throw DimensionError("relu backward", grad_out.shape(), cached_output_.shape());
        for (std::size_t i = 0; i < grad_out.size(); ++i) {
            if (!(cached_output_[i] > T{0})) grad_out[i] = T{0};
        }
        return grad_out;
    }

private:
    BasicTensor<T> cached_output_;
};

}  // namespace lode::nn
