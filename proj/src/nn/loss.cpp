#include "ticketlab/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "ticketlab/errors.hpp"

namespace ticketlab::nn {

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
    const std::size_t classes = logits.dim(1);
    const double* r = logits.data() + row * classes;
    return static_cast<std::size_t>(std::max_element(r, r + classes) - r);
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ConfigError("loss expects logits [N,C], got " + shape_to_string(logits.shape()));
    const std::size_t n = logits.dim(0), classes = logits.dim(1);
    if (labels.size() != n) throw ConfigError("label count does not match batch size");

    LossResult out;
    out.grad = Tensor(logits.shape());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const int label = labels[r];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw ConfigError("label " + std::to_string(label) + " outside [0," + std::to_string(classes) + ")");
        }
        const double* z = logits.data() + r * classes;
        const double z_max = *std::max_element(z, z + classes);
        double total = 0.0;
        for (std::size_t c = 0; c < classes; ++c) total += std::exp(z[c] - z_max);
        const double log_total = std::log(total);
        out.loss += (log_total - (z[label] - z_max)) * inv_n;
        double* g = out.grad.data() + r * classes;
        for (std::size_t c = 0; c < classes; ++c) {
            const double prob = std::exp(z[c] - z_max - log_total);
            g[c] = (prob - (static_cast<std::size_t>(label) == c ? 1.0 : 0.0)) * inv_n;
        }
        if (argmax_row(logits, r) == static_cast<std::size_t>(label)) ++out.correct;
    }
    return out;
}

}  // namespace ticketlab::nn
