#include "ticketlab/harness/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "ticketlab/errors.hpp"
#include "ticketlab/nn/rng.hpp"

namespace ticketlab::harness {
namespace {

constexpr std::size_t kBatchSize = 32;

struct Samples {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
};

nn::Split to_split(const Samples& all, std::span<const std::size_t> rows, const nn::Shape& sample) {
    nn::Shape shape{rows.size()};
    shape.insert(shape.end(), sample.begin(), sample.end());
    nn::Tensor inputs(shape);
    const std::size_t stride = nn::shape_size(sample);
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(all.features[rows[i]].begin(), all.features[rows[i]].end(), inputs.data() + i * stride);
        labels.push_back(all.labels[rows[i]]);
    }
    return {std::move(inputs), std::move(labels)};
}

/// Shuffles sample order with `rng`, then splits 80/20.
Dataset finish(std::string name, Samples all, const nn::Shape& sample, std::size_t classes, nn::Rng& rng) {
    std::vector<std::size_t> order(all.labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t n_train = order.size() * 4 / 5;
    Dataset ds;
    ds.name = std::move(name);
    ds.train = to_split(all, std::span<const std::size_t>(order).first(n_train), sample);
    ds.val = to_split(all, std::span<const std::size_t>(order).subspan(n_train), sample);
    ds.batch_size = kBatchSize;
    ds.num_classes = classes;
    return ds;
}

Dataset make_blobs(std::uint64_t seed) {
    nn::Rng rng(nn::derive_seed(seed, "blobs2d"));
    constexpr int kClasses = 4, kPerClass = 250;
    constexpr double kRadius = 4.0, kSpread = 1.0;
    Samples all;
    for (int c = 0; c < kClasses; ++c) {
        const double angle = c * std::numbers::pi / 2.0;
        const double cx = kRadius * std::cos(angle), cy = kRadius * std::sin(angle);
        for (int i = 0; i < kPerClass; ++i) {
            const double x = cx + kSpread * rng.normal();
            const double y = cy + kSpread * rng.normal();
            all.features.push_back({x, y});
            all.labels.push_back(c);
        }
    }
    return finish("blobs2d", std::move(all), {2}, kClasses, rng);
}

Dataset make_spirals(std::uint64_t seed) {
    nn::Rng rng(nn::derive_seed(seed, "spirals2d"));
    constexpr int kClasses = 3, kSamples = 400;
    constexpr double kNoise = 0.15;
    Samples all;
    for (int i = 0; i < kSamples; ++i) {
        const int c = i % kClasses;
        const double t = rng.uniform(0.0, 1.0);
        const double radius = 0.2 + 2.8 * t;
        const double angle = 3.0 * std::numbers::pi * t + c * 2.0 * std::numbers::pi / kClasses;
        all.features.push_back({radius * std::cos(angle) + kNoise * rng.normal(),
                                radius * std::sin(angle) + kNoise * rng.normal()});
        all.labels.push_back(c);
    }
    return finish("spirals2d", std::move(all), {2}, kClasses, rng);
}

Dataset make_mini_images(std::uint64_t seed) {
    nn::Rng rng(nn::derive_seed(seed, "mini-images"));
    constexpr std::size_t kSide = 8;
    constexpr int kClasses = 4, kPerClass = 100;
    constexpr double kNoise = 0.5;
    // horizontal bar, vertical bar, diagonal, hollow square
    auto template_value = [](int c, std::size_t r, std::size_t col) -> double {
        switch (c) {
            case 0: return (r == 3 || r == 4) ? 1.0 : 0.0;
            case 1: return (col == 3 || col == 4) ? 1.0 : 0.0;
            case 2: return (r == col || r + 1 == col) ? 1.0 : 0.0;
            default: {
                const bool inside = r >= 1 && r <= 6 && col >= 1 && col <= 6;
                return inside && (r == 1 || r == 6 || col == 1 || col == 6) ? 1.0 : 0.0;
            }
        }
    };
    Samples all;
    for (int c = 0; c < kClasses; ++c) {
        for (int i = 0; i < kPerClass; ++i) {
            std::vector<double> pixels(kSide * kSide);
            for (std::size_t r = 0; r < kSide; ++r)
                for (std::size_t col = 0; col < kSide; ++col)
                    pixels[r * kSide + col] = template_value(c, r, col) + kNoise * rng.normal();
            all.features.push_back(std::move(pixels));
            all.labels.push_back(c);
        }
    }
    return finish("mini-images", std::move(all), {1, kSide, kSide}, kClasses, rng);
}

Dataset make_tokens(std::uint64_t seed) {
    nn::Rng rng(nn::derive_seed(seed, "tokens"));
    constexpr std::size_t kTokens = 6, kFeatures = 4;
    constexpr int kClasses = 4, kPerClass = 250;
    constexpr double kSignal = 3.0, kNoise = 0.5;
    Samples all;
    for (int c = 0; c < kClasses; ++c) {
        for (int i = 0; i < kPerClass; ++i) {
            std::vector<double> seq(kTokens * kFeatures);
            for (auto& v : seq) v = kNoise * rng.normal();
            const auto pos = static_cast<std::size_t>(rng.below(kTokens));
            seq[pos * kFeatures + static_cast<std::size_t>(c)] += kSignal;
            all.features.push_back(std::move(seq));
            all.labels.push_back(c);
        }
    }
    return finish("tokens", std::move(all), {kTokens, kFeatures}, kClasses, rng);
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
    if (offset + 4 > bytes.size()) throw ParseError("truncated IDX header", offset);
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

nn::Shape Dataset::sample_shape() const {
    const auto& shape = train.inputs.shape();
    return nn::Shape(shape.begin() + 1, shape.end());
}

nn::Tensor read_idx_images(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    const auto magic = read_be32(bytes, 0);
    if (magic != 0x00000803) throw ParseError("bad IDX image magic", 0);
    const std::size_t count = read_be32(bytes, 4), rows = read_be32(bytes, 8), cols = read_be32(bytes, 12);
    if (count == 0 || rows == 0 || cols == 0) throw ParseError("IDX image dimensions must be positive", 4);
    const std::size_t expected = 16 + count * rows * cols;
    if (bytes.size() < expected) throw ParseError("IDX image data truncated", bytes.size());
    if (bytes.size() > expected) throw ParseError("trailing bytes after IDX image data", expected);
    nn::Tensor images({count, 1, rows, cols});
    for (std::size_t i = 0; i < count * rows * cols; ++i) images[i] = bytes[16 + i] / 255.0;
    return images;
}

std::vector<int> read_idx_labels(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    const auto magic = read_be32(bytes, 0);
    if (magic != 0x00000801) throw ParseError("bad IDX label magic", 0);
    const std::size_t count = read_be32(bytes, 4);
    const std::size_t expected = 8 + count;
    if (bytes.size() < expected) throw ParseError("IDX label data truncated", bytes.size());
    if (bytes.size() > expected) throw ParseError("trailing bytes after IDX label data", expected);
    return {bytes.begin() + 8, bytes.end()};
}

Dataset make_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                         std::uint64_t seed) {
    const auto pixels = read_idx_images(images);
    const auto classes = read_idx_labels(labels);
    if (classes.size() != pixels.dim(0)) {
        throw ConfigError("IDX image count " + std::to_string(pixels.dim(0)) + " does not match label count " +
                          std::to_string(classes.size()));
    }
    const nn::Shape sample{1, pixels.dim(2), pixels.dim(3)};
    const std::size_t stride = nn::shape_size(sample);
    Samples all;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        all.features.emplace_back(pixels.data() + i * stride, pixels.data() + (i + 1) * stride);
        all.labels.push_back(classes[i]);
    }
    const auto num_classes = static_cast<std::size_t>(*std::max_element(classes.begin(), classes.end())) + 1;
    nn::Rng rng(nn::derive_seed(seed, "idx"));
    return finish("idx", std::move(all), sample, num_classes, rng);
}

Dataset make_dataset(std::string_view name, std::uint64_t seed) {
    if (name == "blobs2d") return make_blobs(seed);
    if (name == "spirals2d") return make_spirals(seed);
    if (name == "mini-images") return make_mini_images(seed);
    if (name == "tokens") return make_tokens(seed);
    if (name.starts_with("idx:")) {
        const auto rest = name.substr(4);
        const auto colon = rest.find(':');
        if (colon == std::string_view::npos) throw ConfigError("idx dataset needs 'idx:<images>:<labels>'");
        auto ds = make_idx_dataset(std::string(rest.substr(0, colon)), std::string(rest.substr(colon + 1)), seed);
        ds.name = std::string(name);
        return ds;
    }
    throw ConfigError("unknown dataset '" + std::string(name) +
                      "' (expected blobs2d, spirals2d, mini-images, tokens or idx:<images>:<labels>)");
}

}  // namespace ticketlab::harness
