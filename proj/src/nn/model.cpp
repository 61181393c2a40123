#include "ticketlab/nn/model.hpp"

#include <cstring>
#include <set>

#include "ticketlab/errors.hpp"

namespace ticketlab::nn {

Model::Model(const Model& other) : sample_shape_(other.sample_shape_) {
    layers_.reserve(other.layers_.size());
    for (const auto& layer : other.layers_) layers_.push_back(layer->clone());
}

Model& Model::operator=(const Model& other) {
    if (this != &other) {
        Model copy(other);
        *this = std::move(copy);
    }
    return *this;
}

Model& Model::add(std::unique_ptr<Layer> layer) {
    std::set<std::string_view> seen;
    for (const auto* p : parameters()) seen.insert(p->path);
    for (const auto* p : layer->parameters()) {
        if (!seen.insert(p->path).second) throw ConfigError("duplicate parameter path '" + p->path + "'");
    }
    layers_.push_back(std::move(layer));
    return *this;
}

Tensor Model::forward(const Tensor& batch, Phase phase) {
    Shape expected{batch.rank() ? batch.dim(0) : 0};
    expected.insert(expected.end(), sample_shape_.begin(), sample_shape_.end());
    if (batch.shape() != expected) {
        throw ConfigError("batch shape " + shape_to_string(batch.shape()) +
                          " does not match model input [N]" + shape_to_string(sample_shape_));
    }
    Tensor x = batch;
    for (auto& layer : layers_) x = layer->forward(x, phase);
    forward_cached_ = phase == Phase::kTrain;
    return x;
}

void Model::backward(const Tensor& loss_grad) {
    if (!forward_cached_) throw UsageError("backward called without a training forward pass");
    forward_cached_ = false;
    Tensor g = loss_grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    for (auto& layer : layers_)
        for (auto* p : layer->parameters()) out.push_back(p);
    return out;
}

std::vector<const Parameter*> Model::parameters() const {
    std::vector<const Parameter*> out;
    for (const auto& layer : layers_)
        for (const auto* p : std::as_const(*layer).parameters()) out.push_back(p);
    return out;
}

Parameter* Model::find(std::string_view path) {
    for (auto* p : parameters())
        if (p->path == path) return p;
    return nullptr;
}

const Parameter* Model::find(std::string_view path) const {
    for (const auto* p : parameters())
        if (p->path == path) return p;
    return nullptr;
}

void Model::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

std::uint64_t Model::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto* p : parameters()) {
        mix(p->path.data(), p->path.size());
        mix(p->value.data(), p->value.size() * sizeof(double));
    }
    return h;
}

}  // namespace ticketlab::nn
