#pragma once

#include "lode/nn/tensor.hpp"

#include <Eigen/Core>

namespace lode::nn::linalg {

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<const RowMajor<T>> view(const BasicTensor<T>& t) {
    return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

template <typename T>
Eigen::Map<RowMajor<T>> view(BasicTensor<T>& t) {
    return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

/// a (m x k) times b^T where b is (n x k); result (m x n).
template <typename T>
BasicTensor<T> matmul_nt(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.cols() != b.cols()) throw DimensionError("matmul_nt inner dimension", a.shape(), b.shape());
    auto out = BasicTensor<T>::matrix(a.rows(), b.rows());
    view(out).noalias() = view(a) * view(b).transpose();
    return out;
}

/// a^T times b where a is (m x n), b is (m x k); result (n x k).
template <typename T>
BasicTensor<T> matmul_tn(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.rows() != b.rows()) throw DimensionError("matmul_tn outer dimension", a.shape(), b.shape());
    auto out = BasicTensor<T>::matrix(a.cols(), b.cols());
    view(out).noalias() = view(a).transpose() * view(b);
    return out;
}

/// a (m x n) times b (n x k).
template <typename T>
BasicTensor<T> matmul_nn(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.cols() != b.rows()) throw DimensionError("matmul_nn inner dimension", a.shape(), b.shape());
    auto out = BasicTensor<T>::matrix(a.rows(), b.cols());
    view(out).noalias() = view(a) * view(b);
    return out;
}

}  // namespace lode::nn::linalg
