#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ticketlab/nn/training.hpp"

namespace ticketlab::harness {

struct Dataset {
    std::string name;
    nn::Split train;
    nn::Split val;
    std::size_t batch_size = 32;
    std::size_t num_classes = 0;

    nn::Shape sample_shape() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Deterministic synthetic datasets, split 80/20 into train/val:
///   blobs2d      four Gaussian blobs in the plane
///   spirals2d    three interleaved noisy spiral arms
///   mini-images  8x8 single-channel class templates plus noise
///   tokens       6-token sequences of 4-d vectors; one token carries the class
///   idx:<images>:<labels>   IDX image/label files from disk
Dataset make_dataset(std::string_view name, std::uint64_t seed);

/// Raw IDX readers. Images are scaled to [0, 1] and shaped [N, 1, H, W].
nn::Tensor read_idx_images(const std::filesystem::path& path);
std::vector<int> read_idx_labels(const std::filesystem::path& path);

Dataset make_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                         std::uint64_t seed);

}  // namespace ticketlab::harness
