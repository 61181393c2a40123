#include "ticketlab/pruning/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ticketlab/errors.hpp"

namespace ticketlab::pruning {
namespace {

nn::Parameter& require_param(nn::Model& model, const std::string& path) {
    auto* p = model.find(path);
    if (!p) throw ConfigError("mask path '" + path + "' not found in model");
    return *p;
}

void require_fits(const nn::Parameter& p, const PruneMask::Entry& e) {
    if (p.size() != e.bits.size()) {
        throw UsageError("mask entry '" + e.path + "' has " + std::to_string(e.bits.size()) +
                         " bits for a parameter with " + std::to_string(p.size()) + " elements");
    }
}

}  // namespace

RepresentativeSet representative_set(const nn::Model& model) {
    RepresentativeSet reps;
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        for (auto& path : model.layer(i).representative_paths()) reps.paths.push_back(path);
    }
    return reps;
}

const PruneMask::Entry* PruneMask::find(std::string_view path) const {
    for (const auto& e : entries_)
        if (e.path == path) return &e;
    return nullptr;
}

std::size_t PruneMask::total_bits() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.bits.size();
    return n;
}

std::size_t PruneMask::pruned_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(std::count(e.bits.begin(), e.bits.end(), 1));
    return n;
}

PruneMask PruneMask::complement() const {
    PruneMask out = *this;
    for (auto& e : out.entries_)
        for (auto& b : e.bits) b = b ? 0 : 1;
    return out;
}

std::size_t prune_count(double p, std::size_t n) {
    const auto count = static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 0.5));
    return std::min(count, n);
}

PruneMask build_mask(const nn::Model& model, const RepresentativeSet& reps, double p) {
    if (reps.paths.empty()) throw ConfigError("representative set is empty");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("prune ratio must lie in [0, 1]");

    std::vector<PruneMask::Entry> entries;
    entries.reserve(reps.paths.size());
    std::vector<std::size_t> order;
    for (const auto& path : reps.paths) {
        const auto* param = model.find(path);
        if (!param) throw ConfigError("representative path '" + path + "' not found in model");
        const auto values = param->value.values();
        const std::size_t n = values.size();
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t k = prune_count(p, n);
        auto by_magnitude = [&](std::size_t a, std::size_t b) {
            const double ma = std::abs(values[a]), mb = std::abs(values[b]);
            return ma < mb || (ma == mb && a < b);
        };
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                         by_magnitude);
        PruneMask::Entry entry{path, std::vector<std::uint8_t>(n, 0)};
        for (std::size_t i = 0; i < k; ++i) entry.bits[order[i]] = 1;
        entries.push_back(std::move(entry));
    }
    return PruneMask(std::move(entries), p);
}

double mask_distance(const PruneMask& a, const PruneMask& b) {
    const auto& ea = a.entries();
    const auto& eb = b.entries();
    if (ea.size() != eb.size()) throw UsageError("masks cover different numbers of tensors");
    std::size_t differing = 0, total = 0;
    for (std::size_t i = 0; i < ea.size(); ++i) {
        if (ea[i].path != eb[i].path || ea[i].bits.size() != eb[i].bits.size()) {
            throw UsageError("mask entries differ: '" + ea[i].path + "' vs '" + eb[i].path + "'");
        }
        for (std::size_t j = 0; j < ea[i].bits.size(); ++j) differing += ea[i].bits[j] != eb[i].bits[j];
        total += ea[i].bits.size();
    }
    if (total == 0) return 0.0;
    return static_cast<double>(differing) / static_cast<double>(total);
}

void apply_mask_permanently(nn::Model& model, const PruneMask& mask) {
    for (const auto& e : mask.entries()) {
        auto& param = require_param(model, e.path);
        require_fits(param, e);
        for (std::size_t i = 0; i < e.bits.size(); ++i) {
            if (e.bits[i]) {
                if (param.frozen.empty()) param.frozen.assign(param.size(), 0);
                param.value[i] = 0.0;
                param.frozen[i] = 1;
            }
        }
    }
}

void truncate_gradients(nn::Model& model, const PruneMask& mask, double r) {
    for (const auto& e : mask.entries()) {
        auto& param = require_param(model, e.path);
        require_fits(param, e);
        for (std::size_t i = 0; i < e.bits.size(); ++i)
            if (e.bits[i]) param.grad[i] *= r;
    }
}

}  // namespace ticketlab::pruning
