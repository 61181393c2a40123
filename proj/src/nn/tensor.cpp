#include "ticketlab/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ticketlab/errors.hpp"

namespace ticketlab::nn {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    for (auto d : shape_) {
        if (d == 0) throw ConfigError("tensor dimensions must be positive: " + shape_to_string(shape_));
    }
    values_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    for (auto d : shape_) {
        if (d == 0) throw ConfigError("tensor dimensions must be positive: " + shape_to_string(shape_));
    }
    if (values_.size() != shape_size(shape_)) {
        throw ConfigError("tensor of shape " + shape_to_string(shape_) + " needs " +
                          std::to_string(shape_size(shape_)) + " values, got " +
                          std::to_string(values_.size()));
    }
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_size(shape) != values_.size()) {
        throw ConfigError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    return Tensor(std::move(shape), values_);
}

}  // namespace ticketlab::nn
