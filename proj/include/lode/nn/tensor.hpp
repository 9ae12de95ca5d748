#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lode::nn {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

class DimensionError : public std::invalid_argument {
public:
    DimensionError(const std::string& what, const Shape& a, const Shape& b)
        : std::invalid_argument(what + ": " + shape_string(a) + " vs " + shape_string(b)) {}
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major tensor. Most values in the engine are rank 2 (batch x features);
/// rows() and cols() view any tensor that way, folding leading dimensions into rows.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T{0})
        : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

    BasicTensor(Shape shape, const std::vector<T>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
        if (data_.size() != shape_size(shape_)) {
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string(shape_));
        }
    }

    static BasicTensor matrix(std::size_t rows, std::size_t cols, T fill = T{0}) {
        return BasicTensor(Shape{rows, cols}, fill);
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }
    std::size_t rows() const { return cols() == 0 ? 0 : data_.size() / cols(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    bool all_finite() const {
        for (const T v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    bool same_shape(const BasicTensor& other) const { return shape_ == other.shape_; }

    template <typename U>
    BasicTensor<U> cast() const {
        return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    Shape shape_;
    // Eigen picks vectorized code paths by buffer alignment; a fixed alignment keeps results
    // bit-identical from run to run.
    std::vector<T, Eigen::aligned_allocator<T>> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

}  // namespace lode::nn
