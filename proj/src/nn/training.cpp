#include "ticketlab/nn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ticketlab/errors.hpp"
#include "ticketlab/nn/loss.hpp"
#include "ticketlab/nn/optim.hpp"

namespace ticketlab::nn {

Tensor gather_rows(const Tensor& inputs, std::span<const std::size_t> rows) {
    Shape shape = inputs.shape();
    const std::size_t stride = inputs.size() / shape[0];
    shape[0] = rows.size();
    Tensor out(shape);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy_n(inputs.data() + rows[r] * stride, stride, out.data() + r * stride);
    }
    return out;
}

EpochSummary train_epoch(Model& model, const Split& data, std::size_t batch_size, double lr, Rng& rng,
                         int epoch, const GradientHook& hook) {
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    EpochSummary summary;
    std::size_t correct = 0;
    std::vector<int> labels;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += batch_size, ++batch) {
        const std::size_t end = std::min(start + batch_size, order.size());
        const std::span<const std::size_t> rows(order.data() + start, end - start);
        labels.clear();
        for (auto r : rows) labels.push_back(data.labels[r]);

        const Tensor logits = model.forward(gather_rows(data.inputs, rows), Phase::kTrain);
        auto result = softmax_cross_entropy(logits, labels);
        if (!std::isfinite(result.loss)) throw TrainingDiverged(epoch, batch);
        model.backward(result.grad);
        if (hook) hook(model);
        sgd_step(model, lr);

        summary.loss += result.loss * static_cast<double>(rows.size());
        correct += result.correct;
    }
    summary.loss /= static_cast<double>(data.size());
    summary.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return summary;
}

EpochSummary evaluate(Model& model, const Split& data, std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    EpochSummary summary;
    std::size_t correct = 0;
    std::vector<std::size_t> rows;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        const std::size_t end = std::min(start + batch_size, data.size());
        rows.resize(end - start);
        std::iota(rows.begin(), rows.end(), start);
        const Tensor logits = model.forward(gather_rows(data.inputs, rows), Phase::kEval);
        auto result = softmax_cross_entropy(
            logits, std::span<const int>(data.labels.data() + start, end - start));
        summary.loss += result.loss * static_cast<double>(rows.size());
        correct += result.correct;
    }
    summary.loss /= static_cast<double>(data.size());
    summary.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return summary;
}

}  // namespace ticketlab::nn
