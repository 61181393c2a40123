#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ticketlab/nn/model.hpp"
#include "ticketlab/nn/rng.hpp"

namespace ticketlab::nn {

/// Labelled samples: inputs [N, sample...] and one class index per sample.
struct Split {
    Tensor inputs;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    friend bool operator==(const Split&, const Split&) = default;
};

/// Copies the listed samples into a new batch tensor.
Tensor gather_rows(const Tensor& inputs, std::span<const std::size_t> rows);

struct EpochSummary {
    double loss = 0.0;      // sample-weighted mean
    double accuracy = 0.0;
};

/// Called after backward and before the SGD update of every batch.
using GradientHook = std::function<void(Model&)>;

/// One pass over `data` in an order shuffled by `rng`. Throws
/// TrainingDiverged (tagged with `epoch` and the batch index) on a non-finite loss.
EpochSummary train_epoch(Model& model, const Split& data, std::size_t batch_size, double lr, Rng& rng,
                         int epoch, const GradientHook& hook = {});

/// Loss and accuracy in evaluation phase.
EpochSummary evaluate(Model& model, const Split& data, std::size_t batch_size);

}  // namespace ticketlab::nn
