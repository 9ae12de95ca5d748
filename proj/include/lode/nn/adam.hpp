#pragma once

#include "lode/nn/layers.hpp"
#include "lode/nn/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace lode::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class NonFiniteGradientError : public std::runtime_error {
public:
    explicit NonFiniteGradientError(const std::string& tensor)
        : std::runtime_error("non-finite gradient in " + tensor), tensor_(tensor) {}
    const std::string& tensor() const { return tensor_; }

private:
    std::string tensor_;
};

/// Adam with bias correction. Moment buffers are bound to the parameter list on the first step;
/// later steps must pass the same list in the same order.
template <typename T>
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    const AdamConfig& config() const { return config_; }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }
    double learning_rate() const { return config_.learning_rate; }
    std::int64_t step_count() const { return steps_; }

    void step(std::span<const ParamRef<T>> params) {
        for (const auto& p : params) {
            if (!p.value->same_shape(*p.grad)) throw DimensionError("adam " + p.name, p.value->shape(), p.grad->shape());
            if (!p.grad->all_finite()) throw NonFiniteGradientError(p.name);
        }
        if (first_.empty()) {
            for (const auto& p : params) {
                first_.emplace_back(p.value->shape());
                second_.emplace_back(p.value->shape());
            }
        } else if (first_.size() != params.size()) {
            throw std::invalid_argument("adam parameter list changed between steps");
        }
        ++steps_;
        const T b1 = static_cast<T>(config_.beta1);
        const T b2 = static_cast<T>(config_.beta2);
        const T correction1 = static_cast<T>(1.0 - std::pow(config_.beta1, static_cast<double>(steps_)));
        const T correction2 = static_cast<T>(1.0 - std::pow(config_.beta2, static_cast<double>(steps_)));
        const T lr = static_cast<T>(config_.learning_rate);
        const T eps = static_cast<T>(config_.epsilon);
        using Array = Eigen::Array<T, Eigen::Dynamic, 1>;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto n = static_cast<Eigen::Index>(params[i].value->size());
            Eigen::Map<Array> m(first_[i].data(), n);
            Eigen::Map<Array> v(second_[i].data(), n);
            Eigen::Map<Array> value(params[i].value->data(), n);
            Eigen::Map<const Array> g(params[i].grad->data(), n);
            m = b1 * m + (T{1} - b1) * g;
            v = b2 * v + (T{1} - b2) * g.square();
            value -= lr * (m / correction1) / ((v / correction2).sqrt() + eps);
        }
    }

private:
    AdamConfig config_;
    std::int64_t steps_ = 0;
    std::vector<BasicTensor<T>> first_;
    std::vector<BasicTensor<T>> second_;
};

}  // namespace lode::nn
