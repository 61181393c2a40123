#pragma once

#include <cstdint>
#include <string_view>

#include "ticketlab/nn/model.hpp"

namespace ticketlab::harness {

/// Builds a freshly initialized network for one of:
///   mlp-bn     flatten, 2 x (dense, batchnorm, relu), dense head
///   cnn-bn     2 x (conv3x3, batchnorm, relu), flatten, dense head; input [C,H,W]
///   tiny-attn  per-token dense embedding, single-head attention, token mean, dense head; input [T,F]
nn::Model build_model(std::string_view arch, const nn::Shape& sample_shape, std::size_t num_classes,
                      std::uint64_t seed);

bool is_known_arch(std::string_view arch);

}  // namespace ticketlab::harness
