#include "ticketlab/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "ticketlab/errors.hpp"

namespace ticketlab::nn {
namespace {

void init_uniform(Tensor& t, double bound, Rng& rng) {
    for (auto& v : t.values()) v = rng.uniform(-bound, bound);
}

void require_cache(const Tensor& cached, const Layer& layer) {
    if (cached.empty()) {
        throw UsageError("backward called on layer '" + layer.name() +
                         "' without a preceding training forward pass");
    }
}

void require_same_shape(const Tensor& grad, const Shape& expected, const Layer& layer) {
    if (grad.shape() != expected) {
        throw ConfigError("gradient shape " + shape_to_string(grad.shape()) + " does not match output " +
                          shape_to_string(expected) + " of layer '" + layer.name() + "'");
    }
}

}  // namespace

std::vector<const Parameter*> Layer::parameters() const {
    auto mutable_params = const_cast<Layer*>(this)->parameters();
    return {mutable_params.begin(), mutable_params.end()};
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::string name, std::size_t in, std::size_t out, Rng& rng, InitGain gain)
    : Layer(std::move(name)),
      in_(in),
      out_(out),
      weight_(path_of("weight"), Tensor({out, in})),
      bias_(path_of("bias"), Tensor({out})) {
    const double scale = gain == InitGain::kHe ? 6.0 : 3.0;
    init_uniform(weight_.value, std::sqrt(scale / static_cast<double>(in)), rng);
}

Shape Dense::output_shape(const Shape& input) const {
    if (input.empty() || input.back() != in_) {
        throw ConfigError("dense layer '" + name() + "' expects last axis " + std::to_string(in_) +
                          ", got shape " + shape_to_string(input));
    }
    Shape out = input;
    out.back() = out_;
    return out;
}

Tensor Dense::forward(const Tensor& x, Phase phase) {
    Tensor y(output_shape(x.shape()));
    const std::size_t rows = x.size() / in_;
    const auto& w = weight_.value;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * in_;
        double* yr = y.data() + r * out_;
        for (std::size_t o = 0; o < out_; ++o) {
            double acc = bias_.value[o];
            const double* wo = w.data() + o * in_;
            for (std::size_t i = 0; i < in_; ++i) acc += wo[i] * xr[i];
            yr[o] = acc;
        }
    }
    if (phase == Phase::kTrain) input_ = x;
    return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
    require_cache(input_, *this);
    require_same_shape(grad_out, output_shape(input_.shape()), *this);
    const std::size_t rows = input_.size() / in_;
    weight_.zero_grad();
    bias_.zero_grad();
    Tensor dx(input_.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = input_.data() + r * in_;
        const double* gr = grad_out.data() + r * out_;
        double* dxr = dx.data() + r * in_;
        for (std::size_t o = 0; o < out_; ++o) {
            const double g = gr[o];
            bias_.grad[o] += g;
            double* dwo = weight_.grad.data() + o * in_;
            const double* wo = weight_.value.data() + o * in_;
            for (std::size_t i = 0; i < in_; ++i) {
                dwo[i] += g * xr[i];
                dxr[i] += g * wo[i];
            }
        }
    }
    input_ = Tensor();
    return dx;
}

// ---------------------------------------------------------------------------
// Conv2D

Conv2D::Conv2D(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               Rng& rng)
    : Layer(std::move(name)),
      cin_(in_channels),
      cout_(out_channels),
      k_(kernel),
      weight_(path_of("weight"), Tensor({out_channels, in_channels, kernel, kernel})),
      bias_(path_of("bias"), Tensor({out_channels})) {
    if (kernel % 2 == 0) throw ConfigError("conv2d kernel size must be odd");
    init_uniform(weight_.value, std::sqrt(6.0 / static_cast<double>(cin_ * k_ * k_)), rng);
}

Shape Conv2D::output_shape(const Shape& input) const {
    if (input.size() != 4 || input[1] != cin_) {
        throw ConfigError("conv2d layer '" + name() + "' expects [N," + std::to_string(cin_) +
                          ",H,W], got " + shape_to_string(input));
    }
    return {input[0], cout_, input[2], input[3]};
}

Tensor Conv2D::forward(const Tensor& x, Phase phase) {
    Tensor y(output_shape(x.shape()));
    const std::size_t n_batch = x.dim(0), height = x.dim(2), width = x.dim(3);
    const auto pad = static_cast<std::ptrdiff_t>(k_ / 2);
    const auto h = static_cast<std::ptrdiff_t>(height), w = static_cast<std::ptrdiff_t>(width);
    for (std::size_t n = 0; n < n_batch; ++n) {
        for (std::size_t o = 0; o < cout_; ++o) {
            double* yo = y.data() + (n * cout_ + o) * height * width;
            for (std::ptrdiff_t i = 0; i < h; ++i) {
                for (std::ptrdiff_t j = 0; j < w; ++j) {
                    double acc = bias_.value[o];
                    for (std::size_t c = 0; c < cin_; ++c) {
                        const double* xc = x.data() + (n * cin_ + c) * height * width;
                        const double* wk = weight_.value.data() + (o * cin_ + c) * k_ * k_;
                        for (std::size_t u = 0; u < k_; ++u) {
                            const std::ptrdiff_t ii = i + static_cast<std::ptrdiff_t>(u) - pad;
                            if (ii < 0 || ii >= h) continue;
                            for (std::size_t v = 0; v < k_; ++v) {
                                const std::ptrdiff_t jj = j + static_cast<std::ptrdiff_t>(v) - pad;
                                if (jj < 0 || jj >= w) continue;
                                acc += wk[u * k_ + v] * xc[ii * w + jj];
                            }
                        }
                    }
                    yo[i * w + j] = acc;
                }
            }
        }
    }
    if (phase == Phase::kTrain) input_ = x;
    return y;
}

Tensor Conv2D::backward(const Tensor& grad_out) {
    require_cache(input_, *this);
    require_same_shape(grad_out, output_shape(input_.shape()), *this);
    const std::size_t n_batch = input_.dim(0), height = input_.dim(2), width = input_.dim(3);
    const auto pad = static_cast<std::ptrdiff_t>(k_ / 2);
    const auto h = static_cast<std::ptrdiff_t>(height), w = static_cast<std::ptrdiff_t>(width);
    weight_.zero_grad();
    bias_.zero_grad();
    Tensor dx(input_.shape());
    for (std::size_t n = 0; n < n_batch; ++n) {
        for (std::size_t o = 0; o < cout_; ++o) {
            const double* go = grad_out.data() + (n * cout_ + o) * height * width;
            for (std::ptrdiff_t i = 0; i < h; ++i) {
                for (std::ptrdiff_t j = 0; j < w; ++j) {
                    const double g = go[i * w + j];
                    bias_.grad[o] += g;
                    for (std::size_t c = 0; c < cin_; ++c) {
                        const double* xc = input_.data() + (n * cin_ + c) * height * width;
                        double* dxc = dx.data() + (n * cin_ + c) * height * width;
                        const std::size_t kernel_offset = (o * cin_ + c) * k_ * k_;
                        for (std::size_t u = 0; u < k_; ++u) {
                            const std::ptrdiff_t ii = i + static_cast<std::ptrdiff_t>(u) - pad;
                            if (ii < 0 || ii >= h) continue;
                            for (std::size_t v = 0; v < k_; ++v) {
                                const std::ptrdiff_t jj = j + static_cast<std::ptrdiff_t>(v) - pad;
                                if (jj < 0 || jj >= w) continue;
                                weight_.grad[kernel_offset + u * k_ + v] += g * xc[ii * w + jj];
                                dxc[ii * w + jj] += g * weight_.value[kernel_offset + u * k_ + v];
                            }
                        }
                    }
                }
            }
        }
    }
    input_ = Tensor();
    return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::string name, std::size_t channels)
    : Layer(std::move(name)),
      channels_(channels),
      gamma_(path_of("gamma"), Tensor({channels}, 1.0)),
      beta_(path_of("beta"), Tensor({channels}, 0.0)),
      running_mean_(channels, 0.0),
      running_var_(channels, 1.0) {}

Shape BatchNorm::output_shape(const Shape& input) const {
    if ((input.size() != 2 && input.size() != 4) || input[1] != channels_) {
        throw ConfigError("batchnorm layer '" + name() + "' expects [N," + std::to_string(channels_) +
                          "] or [N," + std::to_string(channels_) + ",H,W], got " +
                          shape_to_string(input));
    }
    return input;
}

Tensor BatchNorm::forward(const Tensor& x, Phase phase) {
    output_shape(x.shape());
    const std::size_t n_batch = x.dim(0);
    const std::size_t spatial = x.size() / (n_batch * channels_);
    const std::size_t count = n_batch * spatial;
    Tensor y(x.shape());

    auto at = [&](std::size_t n, std::size_t c, std::size_t s) {
        return (n * channels_ + c) * spatial + s;
    };

    if (phase == Phase::kEval) {
        for (std::size_t c = 0; c < channels_; ++c) {
            const double inv = 1.0 / std::sqrt(running_var_[c] + kEpsilon);
            for (std::size_t n = 0; n < n_batch; ++n)
                for (std::size_t s = 0; s < spatial; ++s) {
                    const auto idx = at(n, c, s);
                    y[idx] = gamma_.value[c] * (x[idx] - running_mean_[c]) * inv + beta_.value[c];
                }
        }
        return y;
    }

    normalized_ = Tensor(x.shape());
    inv_std_.assign(channels_, 0.0);
    for (std::size_t c = 0; c < channels_; ++c) {
        double mean = 0.0;
        for (std::size_t n = 0; n < n_batch; ++n)
            for (std::size_t s = 0; s < spatial; ++s) mean += x[at(n, c, s)];
        mean /= static_cast<double>(count);
        double var = 0.0;
        for (std::size_t n = 0; n < n_batch; ++n)
            for (std::size_t s = 0; s < spatial; ++s) {
                const double d = x[at(n, c, s)] - mean;
                var += d * d;
            }
        var /= static_cast<double>(count);
        const double inv = 1.0 / std::sqrt(var + kEpsilon);
        inv_std_[c] = inv;
        for (std::size_t n = 0; n < n_batch; ++n)
            for (std::size_t s = 0; s < spatial; ++s) {
                const auto idx = at(n, c, s);
                normalized_[idx] = (x[idx] - mean) * inv;
                y[idx] = gamma_.value[c] * normalized_[idx] + beta_.value[c];
            }
        const double unbiased =
            count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
        running_mean_[c] = (1.0 - kMomentum) * running_mean_[c] + kMomentum * mean;
        running_var_[c] = (1.0 - kMomentum) * running_var_[c] + kMomentum * unbiased;
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
    require_cache(normalized_, *this);
    require_same_shape(grad_out, normalized_.shape(), *this);
    const std::size_t n_batch = normalized_.dim(0);
    const std::size_t spatial = normalized_.size() / (n_batch * channels_);
    const auto count = static_cast<double>(n_batch * spatial);
    auto at = [&](std::size_t n, std::size_t c, std::size_t s) {
        return (n * channels_ + c) * spatial + s;
    };

    Tensor dx(normalized_.shape());
    for (std::size_t c = 0; c < channels_; ++c) {
        double sum_g = 0.0, sum_g_xhat = 0.0;
        for (std::size_t n = 0; n < n_batch; ++n)
            for (std::size_t s = 0; s < spatial; ++s) {
                const auto idx = at(n, c, s);
                sum_g += grad_out[idx];
                sum_g_xhat += grad_out[idx] * normalized_[idx];
            }
        gamma_.grad[c] = sum_g_xhat;
        beta_.grad[c] = sum_g;
        const double scale = gamma_.value[c] * inv_std_[c] / count;
        for (std::size_t n = 0; n < n_batch; ++n)
            for (std::size_t s = 0; s < spatial; ++s) {
                const auto idx = at(n, c, s);
                dx[idx] = scale * (count * grad_out[idx] - sum_g - normalized_[idx] * sum_g_xhat);
            }
    }
    normalized_ = Tensor();
    return dx;
}

// ---------------------------------------------------------------------------
// SingleHeadAttention

SingleHeadAttention::SingleHeadAttention(std::string name, std::size_t model_dim, Rng& rng)
    : Layer(std::move(name)),
      dim_(model_dim),
      w_q_(path_of("w_q"), Tensor({model_dim, model_dim})),
      w_k_(path_of("w_k"), Tensor({model_dim, model_dim})),
      w_v_(path_of("w_v"), Tensor({model_dim, model_dim})),
      w_o_(path_of("w_o"), Tensor({model_dim, model_dim})) {
    const double bound = std::sqrt(3.0 / static_cast<double>(dim_));
    for (auto* p : {&w_q_, &w_k_, &w_v_, &w_o_}) init_uniform(p->value, bound, rng);
}

Shape SingleHeadAttention::output_shape(const Shape& input) const {
    if (input.size() != 3 || input[2] != dim_) {
        throw ConfigError("attention layer '" + name() + "' expects [N,T," + std::to_string(dim_) +
                          "], got " + shape_to_string(input));
    }
    return input;
}

namespace {

// out[r, i] = sum_j a[r, j] * w[i, j]   (a: rows x d, w: d x d)
void project(const double* a, const double* w, double* out, std::size_t rows, std::size_t d) {
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += a[r * d + j] * w[i * d + j];
            out[r * d + i] = acc;
        }
}

// dw[i, j] += sum_r g[r, i] * a[r, j];  da[r, j] += sum_i g[r, i] * w[i, j]
void project_backward(const double* a, const double* w, const double* g, double* dw, double* da,
                      std::size_t rows, std::size_t d) {
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < d; ++i) {
            const double gi = g[r * d + i];
            for (std::size_t j = 0; j < d; ++j) {
                dw[i * d + j] += gi * a[r * d + j];
                da[r * d + j] += gi * w[i * d + j];
            }
        }
}

}  // namespace

Tensor SingleHeadAttention::forward(const Tensor& x, Phase phase) {
    output_shape(x.shape());
    const std::size_t n_batch = x.dim(0), tokens = x.dim(1), d = dim_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Tensor q(x.shape()), k(x.shape()), v(x.shape()), heads(x.shape());
    Tensor attn({n_batch, tokens, tokens});
    Tensor y = x;
    std::vector<double> mixed(tokens * d);
    for (std::size_t n = 0; n < n_batch; ++n) {
        const std::size_t off = n * tokens * d;
        project(x.data() + off, w_q_.value.data(), q.data() + off, tokens, d);
        project(x.data() + off, w_k_.value.data(), k.data() + off, tokens, d);
        project(x.data() + off, w_v_.value.data(), v.data() + off, tokens, d);
        double* a = attn.data() + n * tokens * tokens;
        for (std::size_t t = 0; t < tokens; ++t) {
            double row_max = -INFINITY;
            for (std::size_t u = 0; u < tokens; ++u) {
                double s = 0.0;
                for (std::size_t i = 0; i < d; ++i) s += q[off + t * d + i] * k[off + u * d + i];
                a[t * tokens + u] = s * scale;
                row_max = std::max(row_max, a[t * tokens + u]);
            }
            double total = 0.0;
            for (std::size_t u = 0; u < tokens; ++u) {
                a[t * tokens + u] = std::exp(a[t * tokens + u] - row_max);
                total += a[t * tokens + u];
            }
            for (std::size_t u = 0; u < tokens; ++u) a[t * tokens + u] /= total;
            for (std::size_t j = 0; j < d; ++j) {
                double acc = 0.0;
                for (std::size_t u = 0; u < tokens; ++u) acc += a[t * tokens + u] * v[off + u * d + j];
                heads[off + t * d + j] = acc;
            }
        }
        project(heads.data() + off, w_o_.value.data(), mixed.data(), tokens, d);
        for (std::size_t e = 0; e < tokens * d; ++e) y[off + e] += mixed[e];
    }
    if (phase == Phase::kTrain) {
        input_ = x;
        q_ = std::move(q);
        k_ = std::move(k);
        v_ = std::move(v);
        attn_ = std::move(attn);
        heads_ = std::move(heads);
    }
    return y;
}

Tensor SingleHeadAttention::backward(const Tensor& grad_out) {
    require_cache(input_, *this);
    require_same_shape(grad_out, input_.shape(), *this);
    const std::size_t n_batch = input_.dim(0), tokens = input_.dim(1), d = dim_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (auto* p : {&w_q_, &w_k_, &w_v_, &w_o_}) p->zero_grad();

    Tensor dx = grad_out;  // residual path
    std::vector<double> d_heads(tokens * d), d_attn(tokens * tokens), d_scores(tokens * tokens);
    std::vector<double> dq(tokens * d), dk(tokens * d), dv(tokens * d);
    for (std::size_t n = 0; n < n_batch; ++n) {
        const std::size_t off = n * tokens * d;
        const double* g = grad_out.data() + off;
        const double* a = attn_.data() + n * tokens * tokens;
        std::fill(d_heads.begin(), d_heads.end(), 0.0);
        project_backward(heads_.data() + off, w_o_.value.data(), g, w_o_.grad.data(), d_heads.data(),
                         tokens, d);

        std::fill(dv.begin(), dv.end(), 0.0);
        for (std::size_t t = 0; t < tokens; ++t) {
            for (std::size_t u = 0; u < tokens; ++u) {
                double acc = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    acc += d_heads[t * d + j] * v_[off + u * d + j];
                    dv[u * d + j] += a[t * tokens + u] * d_heads[t * d + j];
                }
                d_attn[t * tokens + u] = acc;
            }
            double dot = 0.0;
            for (std::size_t u = 0; u < tokens; ++u) dot += d_attn[t * tokens + u] * a[t * tokens + u];
            for (std::size_t u = 0; u < tokens; ++u)
                d_scores[t * tokens + u] = a[t * tokens + u] * (d_attn[t * tokens + u] - dot) * scale;
        }

        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        for (std::size_t t = 0; t < tokens; ++t)
            for (std::size_t u = 0; u < tokens; ++u) {
                const double s = d_scores[t * tokens + u];
                for (std::size_t i = 0; i < d; ++i) {
                    dq[t * d + i] += s * k_[off + u * d + i];
                    dk[u * d + i] += s * q_[off + t * d + i];
                }
            }

        const double* x = input_.data() + off;
        double* dxn = dx.data() + off;
        project_backward(x, w_q_.value.data(), dq.data(), w_q_.grad.data(), dxn, tokens, d);
        project_backward(x, w_k_.value.data(), dk.data(), w_k_.grad.data(), dxn, tokens, d);
        project_backward(x, w_v_.value.data(), dv.data(), w_v_.grad.data(), dxn, tokens, d);
    }
    input_ = Tensor();
    q_ = k_ = v_ = attn_ = heads_ = Tensor();
    return dx;
}

// ---------------------------------------------------------------------------
// Shape-only and elementwise layers

Tensor ReLU::forward(const Tensor& x, Phase phase) {
    Tensor y = x;
    for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
    if (phase == Phase::kTrain) input_ = x;
    return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
    require_cache(input_, *this);
    require_same_shape(grad_out, input_.shape(), *this);
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (input_[i] <= 0.0) dx[i] = 0.0;
    input_ = Tensor();
    return dx;
}

Shape Flatten::output_shape(const Shape& input) const {
    if (input.empty()) throw ConfigError("flatten needs a batch axis");
    return {input[0], shape_size(input) / input[0]};
}

Tensor Flatten::forward(const Tensor& x, Phase phase) {
    if (phase == Phase::kTrain) input_shape_ = x.shape();
    return x.reshaped(output_shape(x.shape()));
}

Tensor Flatten::backward(const Tensor& grad_out) {
    if (input_shape_.empty()) {
        throw UsageError("backward called on layer '" + name() +
                         "' without a preceding training forward pass");
    }
    Tensor dx = grad_out.reshaped(input_shape_);
    input_shape_.clear();
    return dx;
}

Shape TokenMean::output_shape(const Shape& input) const {
    if (input.size() != 3) throw ConfigError("token_mean expects [N,T,D], got " + shape_to_string(input));
    return {input[0], input[2]};
}

Tensor TokenMean::forward(const Tensor& x, Phase phase) {
    Tensor y(output_shape(x.shape()));
    const std::size_t n_batch = x.dim(0), tokens = x.dim(1), d = x.dim(2);
    for (std::size_t n = 0; n < n_batch; ++n)
        for (std::size_t t = 0; t < tokens; ++t)
            for (std::size_t j = 0; j < d; ++j) y[n * d + j] += x[(n * tokens + t) * d + j];
    for (auto& v : y.values()) v /= static_cast<double>(tokens);
    if (phase == Phase::kTrain) input_shape_ = x.shape();
    return y;
}

Tensor TokenMean::backward(const Tensor& grad_out) {
    if (input_shape_.empty()) {
        throw UsageError("backward called on layer '" + name() +
                         "' without a preceding training forward pass");
    }
    const std::size_t n_batch = input_shape_[0], tokens = input_shape_[1], d = input_shape_[2];
    Tensor dx(input_shape_);
    const double inv = 1.0 / static_cast<double>(tokens);
    for (std::size_t n = 0; n < n_batch; ++n)
        for (std::size_t t = 0; t < tokens; ++t)
            for (std::size_t j = 0; j < d; ++j) dx[(n * tokens + t) * d + j] = grad_out[n * d + j] * inv;
    input_shape_.clear();
    return dx;
}

}  // namespace ticketlab::nn
