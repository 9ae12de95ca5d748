#pragma once

#include "lode/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lode::nn {

inline constexpr double kLogClamp = 1e-12;

/// Softmax over each consecutive run of `group_size` entries, max-subtracted.
template <typename T>
BasicTensor<T> softmax_groups(const BasicTensor<T>& input, std::size_t group_size) {
    if (group_size == 0 || input.cols() % group_size != 0) {
        throw DimensionError("softmax group size " + std::to_string(group_size) + " does not divide last dimension",
                             input.shape(), Shape{group_size});
    }
    BasicTensor<T> out(input.shape());
    for (std::size_t g = 0; g < input.size(); g += group_size) {
        double peak = input[g];
        for (std::size_t k = 1; k < group_size; ++k) peak = std::max(peak, static_cast<double>(input[g + k]));
        double total = 0.0;
        for (std::size_t k = 0; k < group_size; ++k) {
            const double e = std::exp(static_cast<double>(input[g + k]) - peak);
            out[g + k] = static_cast<T>(e);
            total += e;
        }
        for (std::size_t k = 0; k < group_size; ++k) out[g + k] = static_cast<T>(out[g + k] / total);
    }
    return out;
}

/// Vector-Jacobian product of softmax_groups given its output.
template <typename T>
BasicTensor<T> softmax_groups_backward(const BasicTensor<T>& output, const BasicTensor<T>& grad_out,
                                       std::size_t group_size) {
    if (!output.same_shape(grad_out)) throw DimensionError("softmax backward", output.shape(), grad_out.shape());
    BasicTensor<T> grad_in(output.shape());
    for (std::size_t g = 0; g < output.size(); g += group_size) {
        double dot = 0.0;
        for (std::size_t k = 0; k < group_size; ++k) dot += static_cast<double>(grad_out[g + k]) * output[g + k];
        for (std::size_t k = 0; k < group_size; ++k) {
            grad_in[g + k] = static_cast<T>(output[g + k] * (grad_out[g + k] - dot));
        }
    }
    return grad_in;
}

/// Mean over tiles of -sum(target * log(max(predicted, 1e-12))). A tile is one group of `channels` entries.
template <typename T>
double cce_loss(const BasicTensor<T>& predicted, const BasicTensor<T>& target, std::size_t channels) {
    if (!predicted.same_shape(target)) throw DimensionError("cce shapes", predicted.shape(), target.shape());
    if (channels == 0 || predicted.size() % channels != 0) {
        throw DimensionError("cce channel count does not divide tensor", predicted.shape(), Shape{channels});
    }
    const std::size_t tiles = predicted.size() / channels;
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (target[i] != T{0}) total -= target[i] * std::log(std::max(static_cast<double>(predicted[i]), kLogClamp));
    }
    return total / static_cast<double>(tiles);
}

/// dL/dpredicted for cce_loss; zero where the clamp is active.
template <typename T>
BasicTensor<T> cce_loss_backward(const BasicTensor<T>& predicted, const BasicTensor<T>& target, std::size_t channels) {
    if (!predicted.same_shape(target)) throw DimensionError("cce shapes", predicted.shape(), target.shape());
    const double tiles = static_cast<double>(predicted.size() / channels);
    BasicTensor<T> grad(predicted.shape());
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double p = predicted[i];
        grad[i] = p > kLogClamp ? static_cast<T>(-target[i] / (p * tiles)) : T{0};
    }
    return grad;
}

/// Gradient of cce_loss(softmax_groups(logits)) with respect to the logits, given the softmax output.
/// Equals the composed backward pass but avoids dividing by small probabilities.
template <typename T>
BasicTensor<T> softmax_cce_backward(const BasicTensor<T>& probs, const BasicTensor<T>& target, std::size_t channels) {
    if (!probs.same_shape(target)) throw DimensionError("cce shapes", probs.shape(), target.shape());
    const double tiles = static_cast<double>(probs.size() / channels);
    BasicTensor<T> grad(probs.shape());
    for (std::size_t g = 0; g < probs.size(); g += channels) {
        double live_mass = 0.0;
        for (std::size_t k = 0; k < channels; ++k) {
            if (probs[g + k] > kLogClamp) live_mass += target[g + k];
        }
        for (std::size_t k = 0; k < channels; ++k) {
            const double own = probs[g + k] > kLogClamp ? static_cast<double>(target[g + k]) : 0.0;
            grad[g + k] = static_cast<T>((probs[g + k] * live_mass - own) / tiles);
        }
    }
    return grad;
}

}  // namespace lode::nn
