#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/tensor.hpp"

namespace gliomkit::net {

template <typename T>
struct LossResult {
    T loss = T{};
    Tensor<T> d_logits; // (softmax - onehot) / P
};

// Mean cross-entropy over sampled pixels, log-sum-exp stabilized.
template <typename T>
LossResult<T> softmax_xent_loss(const Tensor<T>& logits, const std::vector<int>& labels) {
    const std::int64_t P = logits.dim(0), K = logits.dim(1);
    if (static_cast<std::int64_t>(labels.size()) != P)
        throw shape_error(concat("loss: ", labels.size(), " labels for ", P, " logit rows"));
    LossResult<T> res;
    res.d_logits = Tensor<T>({P, K});
    double total = 0.0;
    for (std::int64_t p = 0; p < P; ++p) {
        const T* row = logits.data() + p * K;
        const int label = labels[static_cast<std::size_t>(p)];
        if (label < 0 || label >= K)
            throw value_error(concat("loss: label ", label, " outside [0,", K, ")"));
        T max_logit = row[0];
        for (std::int64_t k = 1; k < K; ++k) max_logit = std::max(max_logit, row[k]);
        double sum_exp = 0.0;
        for (std::int64_t k = 0; k < K; ++k) sum_exp += std::exp(static_cast<double>(row[k] - max_logit));
        const double lse = static_cast<double>(max_logit) + std::log(sum_exp);
        total += lse - static_cast<double>(row[label]);
        T* drow = res.d_logits.data() + p * K;
        for (std::int64_t k = 0; k < K; ++k) {
            const double soft = std::exp(static_cast<double>(row[k]) - lse);
            drow[k] = static_cast<T>((soft - (k == label ? 1.0 : 0.0)) / static_cast<double>(P));
        }
    }
    res.loss = static_cast<T>(total / static_cast<double>(P));
    return res;
}

} // namespace gliomkit::net
