#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ticketlab/nn/model.hpp"

namespace ticketlab::pruning {

/// Parameter paths whose magnitudes are sampled for pruning masks: BatchNorm
/// scale factors in convolutional/MLP models, query and key projections in
/// attention models.
struct RepresentativeSet {
    std::vector<std::string> paths;

    friend bool operator==(const RepresentativeSet&, const RepresentativeSet&) = default;
};

/// Collects every layer's representative parameters in model order.
RepresentativeSet representative_set(const nn::Model& model);

/// Binary prune marks (1 = prune, 0 = keep), one per scalar element of each
/// representative tensor.
class PruneMask {
public:
    struct Entry {
        std::string path;
        std::vector<std::uint8_t> bits;

        friend bool operator==(const Entry&, const Entry&) = default;
    };

    PruneMask() = default;
    PruneMask(std::vector<Entry> entries, double prune_ratio)
        : entries_(std::move(entries)), prune_ratio_(prune_ratio) {}

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::vector<Entry>& entries() noexcept { return entries_; }
    double prune_ratio() const noexcept { return prune_ratio_; }

    const Entry* find(std::string_view path) const;
    std::size_t total_bits() const;
    std::size_t pruned_count() const;

    /// Every bit flipped; same paths and ratio field.
    PruneMask complement() const;

    friend bool operator==(const PruneMask&, const PruneMask&) = default;

private:
    std::vector<Entry> entries_;
    double prune_ratio_ = 0.0;
};

/// round(p * n) with halves rounded up.
std::size_t prune_count(double p, std::size_t n);

/// Marks the round(p*n) smallest-magnitude elements of each representative
/// tensor independently; equal magnitudes prune the lower flat index first.
/// Does not modify the model.
PruneMask build_mask(const nn::Model& model, const RepresentativeSet& reps, double p);

/// Fraction of differing bits over all entries (normalized Hamming distance).
double mask_distance(const PruneMask& a, const PruneMask& b);

/// Zeroes and freezes every pruned element.
void apply_mask_permanently(nn::Model& model, const PruneMask& mask);

/// Scales the gradient of every pruned element by r; everything else is untouched.
void truncate_gradients(nn::Model& model, const PruneMask& mask, double r);

}  // namespace ticketlab::pruning
