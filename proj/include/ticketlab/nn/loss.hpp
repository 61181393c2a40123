#pragma once

#include <cstddef>
#include <span>

#include "ticketlab/nn/tensor.hpp"

namespace ticketlab::nn {

struct LossResult {
    double loss = 0.0;        // mean over the batch
    Tensor grad;              // dLoss/dLogits
    std::size_t correct = 0;  // argmax hits
};

/// Softmax followed by mean cross-entropy over logits [N, C].
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

std::size_t argmax_row(const Tensor& logits, std::size_t row);

}  // namespace ticketlab::nn
