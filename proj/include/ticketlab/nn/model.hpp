#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "ticketlab/nn/layers.hpp"

namespace ticketlab::nn {

/// Ordered stack of layers with a fixed per-sample input shape.
///
/// Copying a Model deep-copies every layer, so a copy is an independent
/// network with identical weights and running statistics.
class Model {
public:
    explicit Model(Shape sample_shape) : sample_shape_(std::move(sample_shape)) {}

    Model(const Model& other);
    Model& operator=(const Model& other);
    Model(Model&&) noexcept = default;
    Model& operator=(Model&&) noexcept = default;

    /// Appends a layer; parameter paths must stay unique.
    Model& add(std::unique_ptr<Layer> layer);

    template <typename L, typename... Args>
    L& emplace(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        add(std::move(layer));
        return ref;
    }

    const Shape& sample_shape() const noexcept { return sample_shape_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_.at(i); }
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }

    /// Runs the batch [N, sample_shape...] through every layer.
    Tensor forward(const Tensor& batch, Phase phase = Phase::kTrain);

    /// Propagates dLoss/dLogits back, overwriting every Parameter::grad.
    void backward(const Tensor& loss_grad);

    /// Parameters in layer order, then declaration order within a layer.
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;

    Parameter* find(std::string_view path);
    const Parameter* find(std::string_view path) const;

    void zero_grad();

    /// FNV-1a over every parameter's bytes in iteration order.
    std::uint64_t checksum() const;

private:
    Shape sample_shape_;
    std::vector<std::unique_ptr<Layer>> layers_;
    bool forward_cached_ = false;
};

}  // namespace ticketlab::nn
