#include "ticketlab/nn/optim.hpp"

namespace ticketlab::nn {

void sgd_step(Model& model, double lr) {
    for (auto* p : model.parameters()) {
        auto values = p->value.values();
        auto grads = p->grad.values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (p->is_frozen(i)) grads[i] = 0.0;
            values[i] -= lr * grads[i];
        }
        p->zero_grad();
    }
}

}  // namespace ticketlab::nn
