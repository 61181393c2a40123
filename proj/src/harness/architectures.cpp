#include "ticketlab/harness/architectures.hpp"

#include <string>

#include "ticketlab/errors.hpp"

namespace ticketlab::harness {
namespace {

constexpr std::size_t kMlpHidden = 32;
constexpr std::size_t kConvChannels1 = 4;
constexpr std::size_t kConvChannels2 = 8;
constexpr std::size_t kAttnDim = 8;

}  // namespace

bool is_known_arch(std::string_view arch) {
    return arch == "mlp-bn" || arch == "cnn-bn" || arch == "tiny-attn";
}

nn::Model build_model(std::string_view arch, const nn::Shape& sample_shape, std::size_t num_classes,
                      std::uint64_t seed) {
    if (sample_shape.empty()) throw ConfigError("sample shape must not be empty");
    if (num_classes < 2) throw ConfigError("need at least two classes");
    nn::Rng rng(nn::derive_seed(seed, "init"));
    nn::Model model(sample_shape);

    if (arch == "mlp-bn") {
        const std::size_t in = nn::shape_size(sample_shape);
        model.emplace<nn::Flatten>("flatten");
        model.emplace<nn::Dense>("fc1", in, kMlpHidden, rng);
        model.emplace<nn::BatchNorm>("bn1", kMlpHidden);
        model.emplace<nn::ReLU>("relu1");
        model.emplace<nn::Dense>("fc2", kMlpHidden, kMlpHidden, rng);
        model.emplace<nn::BatchNorm>("bn2", kMlpHidden);
        model.emplace<nn::ReLU>("relu2");
        model.emplace<nn::Dense>("head", kMlpHidden, num_classes, rng, nn::InitGain::kLeCun);
        return model;
    }
    if (arch == "cnn-bn") {
        if (sample_shape.size() != 3) {
            throw ConfigError("cnn-bn needs image samples [C,H,W], got " + nn::shape_to_string(sample_shape));
        }
        const std::size_t pixels = sample_shape[1] * sample_shape[2];
        model.emplace<nn::Conv2D>("conv1", sample_shape[0], kConvChannels1, 3, rng);
        model.emplace<nn::BatchNorm>("bn1", kConvChannels1);
        model.emplace<nn::ReLU>("relu1");
        model.emplace<nn::Conv2D>("conv2", kConvChannels1, kConvChannels2, 3, rng);
        model.emplace<nn::BatchNorm>("bn2", kConvChannels2);
        model.emplace<nn::ReLU>("relu2");
        model.emplace<nn::Flatten>("flatten");
        model.emplace<nn::Dense>("head", kConvChannels2 * pixels, num_classes, rng, nn::InitGain::kLeCun);
        return model;
    }
    if (arch == "tiny-attn") {
        if (sample_shape.size() != 2) {
            throw ConfigError("tiny-attn needs token samples [T,F], got " + nn::shape_to_string(sample_shape));
        }
        model.emplace<nn::Dense>("embed", sample_shape[1], kAttnDim, rng, nn::InitGain::kLeCun);
        model.emplace<nn::SingleHeadAttention>("attn", kAttnDim, rng);
        model.emplace<nn::TokenMean>("pool");
        model.emplace<nn::Dense>("head", kAttnDim, num_classes, rng, nn::InitGain::kLeCun);
        return model;
    }
    throw ConfigError("unknown architecture '" + std::string(arch) + "' (expected mlp-bn, cnn-bn or tiny-attn)");
}

}  // namespace ticketlab::harness
