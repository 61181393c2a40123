#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ticketlab/nn/parameter.hpp"
#include "ticketlab/nn/rng.hpp"
#include "ticketlab/nn/tensor.hpp"

namespace ticketlab::nn {

enum class Phase { kTrain, kEval };

/// A differentiable stage in a sequential model.
///
/// `forward` in training phase caches what `backward` needs. `backward`
/// receives dLoss/dOutput, overwrites the gradients of the layer's own
/// parameters and returns dLoss/dInput.
class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    const std::string& name() const noexcept { return name_; }
    virtual std::string_view kind() const = 0;

    virtual Shape output_shape(const Shape& input) const = 0;
    virtual Tensor forward(const Tensor& x, Phase phase) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;

    virtual std::vector<Parameter*> parameters() { return {}; }
    std::vector<const Parameter*> parameters() const;

    /// Parameters whose magnitudes act as importance scores for pruning.
    virtual std::vector<std::string> representative_paths() const { return {}; }

    virtual std::unique_ptr<Layer> clone() const = 0;

protected:
    std::string path_of(std::string_view param) const { return name_ + "." + std::string(param); }

private:
    std::string name_;
};

enum class InitGain { kHe, kLeCun };

/// y = x W^T + b over the last axis; leading axes are treated as rows.
class Dense final : public Layer {
public:
    Dense(std::string name, std::size_t in, std::size_t out, Rng& rng, InitGain gain = InitGain::kHe);

    std::string_view kind() const override { return "dense"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& x, Phase phase) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }

private:
    std::size_t in_, out_;
    Parameter weight_;  // [out, in]
    Parameter bias_;    // [out]
    Tensor input_;
};

/// 2-D convolution over [N, C, H, W], stride 1, zero "same" padding, odd kernel.
class Conv2D final : public Layer {
public:
    Conv2D(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
           Rng& rng);

    std::string_view kind() const override { return "conv2d"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& x, Phase phase) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2D>(*this); }

    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }

private:
    std::size_t cin_, cout_, k_;
    Parameter weight_;  // [cout, cin, k, k]
    Parameter bias_;    // [cout]
    Tensor input_;
};

/// Per-channel normalization over [N, C] or [N, C, H, W]. Batch statistics
/// in training, running averages in evaluation.
class BatchNorm final : public Layer {
public:
    static constexpr double kEpsilon = 1e-5;
    static constexpr double kMomentum = 0.1;

    BatchNorm(std::string name, std::size_t channels);

    std::string_view kind() const override { return "batchnorm"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& x, Phase phase) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
    std::vector<std::string> representative_paths() const override { return {gamma_.path}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }

    Parameter& gamma() { return gamma_; }
    Parameter& beta() { return beta_; }
    const std::vector<double>& running_mean() const { return running_mean_; }
    const std::vector<double>& running_var() const { return running_var_; }

private:
    std::size_t channels_;
    Parameter gamma_;
    Parameter beta_;
    std::vector<double> running_mean_;
    std::vector<double> running_var_;
    // training cache
    Tensor normalized_;
    std::vector<double> inv_std_;
};

/// Single-head scaled dot-product self-attention over [N, T, D] with a
/// residual connection: y = x + softmax(Q K^T / sqrt(D)) V W_o^T.
class SingleHeadAttention final : public Layer {
public:
    SingleHeadAttention(std::string name, std::size_t model_dim, Rng& rng);

    std::string_view kind() const override { return "attention"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& x, Phase phase) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&w_q_, &w_k_, &w_v_, &w_o_}; }
    std::vector<std::string> representative_paths() const override { return {w_q_.path, w_k_.path}; }
    std::unique_ptr<Layer> clone() const override {
        return std::make_unique<SingleHeadAttention>(*this);
    }

    Parameter& w_q() { return w_q_; }
    Parameter& w_k() { return w_k_; }
    Parameter& w_v() { return w_v_; }
    Parameter& w_o() { return w_o_; }

private:
    std::size_t dim_;
    Parameter w_q_, w_k_, w_v_, w_o_;  // each [D, D]
    Tensor input_, q_, k_, v_, attn_, heads_;
};

class ReLU final : public Layer {
public:
    using Layer::Layer;

    std::string_view kind() const override { return "relu"; }
    Shape output_shape(const Shape& input) const override { return input; }
    Tensor forward(const Tensor& x, Phase phase) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }

private:
    Tensor input_;
};

/// [N, ...] -> [N, prod(...)].
class Flatten final : public Layer {
public:
    using Layer::Layer;

    std::string_view kind() const override { return "flatten"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& x, Phase phase) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

private:
    Shape input_shape_;
};

/// Mean over the token axis: [N, T, D] -> [N, D].
class TokenMean final : public Layer {
public:
    using Layer::Layer;

    std::string_view kind() const override { return "token_mean"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& x, Phase phase) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<TokenMean>(*this); }

private:
    Shape input_shape_;
};

}  // namespace ticketlab::nn
