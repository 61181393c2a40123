#pragma once

#include "ticketlab/nn/model.hpp"

namespace ticketlab::nn {

/// Plain SGD: value -= lr * grad for every non-frozen element, then zero all grads.
void sgd_step(Model& model, double lr);

}  // namespace ticketlab::nn
