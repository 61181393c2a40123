#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ticketlab/nn/tensor.hpp"

namespace ticketlab::nn {

/// A trainable tensor with its gradient buffer.
///
/// Elements flagged in `frozen` are held at their current value (zero after
/// permanent pruning): the optimizer clears their gradient before updating.
struct Parameter {
    Parameter() = default;
    Parameter(std::string path_, Tensor value_)
        : path(std::move(path_)), value(std::move(value_)), grad(value.shape()) {}

    std::string path;
    Tensor value;
    Tensor grad;
    std::vector<std::uint8_t> frozen;  // empty, or one flag per element

    std::size_t size() const noexcept { return value.size(); }
    bool is_frozen(std::size_t i) const { return !frozen.empty() && frozen[i] != 0; }
    void zero_grad() { grad.fill(0.0); }

    friend bool operator==(const Parameter&, const Parameter&) = default;
};

}  // namespace ticketlab::nn
