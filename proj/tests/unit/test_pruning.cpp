#include <gtest/gtest.h>

#include <sstream>

#include "support/gradcheck.hpp"
#include "ticketlab/errors.hpp"
#include "ticketlab/harness/architectures.hpp"
#include "ticketlab/harness/dataset.hpp"
#include "ticketlab/nn/layers.hpp"
#include "ticketlab/nn/loss.hpp"
#include "ticketlab/nn/training.hpp"
#include "ticketlab/pruning/mask.hpp"
#include "ticketlab/pruning/mask_io.hpp"

using namespace ticketlab;
using namespace ticketlab::pruning;
using nn::Model;
using nn::Tensor;

namespace {

Model bn_model(std::vector<double> gamma) {
    const std::size_t n = gamma.size();
    Model model({n});
    auto& bn = model.emplace<nn::BatchNorm>("bn", n);
    bn.gamma().value = Tensor({n}, std::move(gamma));
    return model;
}

PruneMask single(std::vector<std::uint8_t> bits) { return PruneMask({{"bn.gamma", std::move(bits)}}, 0.5); }

PruneMask random_mask(nn::Rng& rng, std::size_t n) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = rng.below(2) ? 1 : 0;
    return single(std::move(bits));
}

}  // namespace

TEST(RepresentativeSet, BatchNormScalesForConvAndMlp) {
    EXPECT_EQ(representative_set(harness::build_model("mlp-bn", {2}, 4, 1)).paths,
              (std::vector<std::string>{"bn1.gamma", "bn2.gamma"}));
    EXPECT_EQ(representative_set(harness::build_model("cnn-bn", {1, 8, 8}, 4, 1)).paths,
              (std::vector<std::string>{"bn1.gamma", "bn2.gamma"}));
}

TEST(RepresentativeSet, QueryAndKeyForAttention) {
    EXPECT_EQ(representative_set(harness::build_model("tiny-attn", {6, 4}, 4, 1)).paths,
              (std::vector<std::string>{"attn.w_q", "attn.w_k"}));
}

TEST(BuildMask, ZeroAndFullRatios) {
    const Model model = bn_model({0.5, 0.1, 0.9, 0.2});
    const auto reps = representative_set(model);
    EXPECT_EQ(build_mask(model, reps, 0.0).entries()[0].bits, (std::vector<std::uint8_t>{0, 0, 0, 0}));
    EXPECT_EQ(build_mask(model, reps, 1.0).entries()[0].bits, (std::vector<std::uint8_t>{1, 1, 1, 1}));
}

TEST(BuildMask, PrunesSmallestMagnitudes) {
    const Model model = bn_model({0.5, 0.1, 0.9, 0.2});
    const auto mask = build_mask(model, representative_set(model), 0.5);
    EXPECT_EQ(mask.entries()[0].bits, (std::vector<std::uint8_t>{0, 1, 0, 1}));
    EXPECT_EQ(mask.prune_ratio(), 0.5);
}

TEST(BuildMask, UsesAbsoluteValueAndBreaksTiesByIndex) {
    const Model model = bn_model({-0.1, 0.3, 0.3, -0.3, 2.0});
    // prune_count(0.6, 5) = 3: |-0.1| first, then the two lowest-index 0.3s
    const auto mask = build_mask(model, representative_set(model), 0.6);
    EXPECT_EQ(mask.entries()[0].bits, (std::vector<std::uint8_t>{1, 1, 1, 0, 0}));
}

TEST(BuildMask, DoesNotModifyModel) {
    const Model model = harness::build_model("mlp-bn", {2}, 4, 3);
    const auto before = model.checksum();
    build_mask(model, representative_set(model), 0.5);
    EXPECT_EQ(model.checksum(), before);
}

TEST(BuildMask, ErrorCases) {
    const Model model = bn_model({1.0, 2.0});
    EXPECT_THROW(build_mask(model, RepresentativeSet{}, 0.5), ConfigError);
    EXPECT_THROW(build_mask(model, representative_set(model), 1.5), ConfigError);
    EXPECT_THROW(build_mask(model, representative_set(model), -0.1), ConfigError);
}

TEST(BuildMask, CountExactOnRatioGrid) {
    nn::Rng rng(4);
    Model model({2});
    model.emplace<nn::BatchNorm>("a", 7);
    model.emplace<nn::BatchNorm>("b", 13);
    for (auto* p : model.parameters())
        for (auto& v : p->value.values()) v = rng.uniform(-1, 1);
    const auto reps = representative_set(model);
    for (int k = 0; k <= 10; ++k) {
        const double p = k / 10.0;
        const auto mask = build_mask(model, reps, p);
        for (const auto& entry : mask.entries()) {
            const auto n = entry.bits.size();
            const auto expected = static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 0.5));
            EXPECT_EQ(std::count(entry.bits.begin(), entry.bits.end(), 1), static_cast<long>(expected))
                << entry.path << " p=" << p;
        }
    }
}

TEST(BuildMask, RoundsHalfUp) {
    EXPECT_EQ(prune_count(0.5, 3), 2u);
    EXPECT_EQ(prune_count(0.5, 5), 3u);
    EXPECT_EQ(prune_count(0.25, 2), 1u);
    EXPECT_EQ(prune_count(0.3, 10), 3u);
    EXPECT_EQ(prune_count(0.7, 10), 7u);
}

TEST(BuildMask, ScaleInvariantPerTensor) {
    nn::Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> values(16);
        for (auto& v : values) v = rng.uniform(-1, 1);
        const Model a = bn_model(values);
        const double c = rng.uniform(0.01, 100.0);
        for (auto& v : values) v *= c;
        const Model b = bn_model(values);
        EXPECT_EQ(build_mask(a, representative_set(a), 0.5), build_mask(b, representative_set(b), 0.5));
    }
}

TEST(MaskDistance, Examples) {
    const auto a = single({1, 0, 1, 1});
    EXPECT_EQ(mask_distance(a, a), 0.0);
    EXPECT_EQ(mask_distance(a, a.complement()), 1.0);
    EXPECT_EQ(mask_distance(a, single({1, 1, 0, 1})), 0.5);
}

TEST(MaskDistance, ConcatenatesAcrossTensors) {
    const PruneMask a({{"x", {1, 0}}, {"y", {0, 0, 0, 0, 0, 0}}}, 0.5);
    const PruneMask b({{"x", {0, 0}}, {"y", {0, 0, 0, 0, 0, 1}}}, 0.5);
    EXPECT_EQ(mask_distance(a, b), 2.0 / 8.0);
}

TEST(MaskDistance, MetricProperties) {
    nn::Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_mask(rng, 12), b = random_mask(rng, 12), c = random_mask(rng, 12);
        EXPECT_EQ(mask_distance(a, a), 0.0);
        EXPECT_EQ(mask_distance(a, b), mask_distance(b, a));
        EXPECT_LE(mask_distance(a, c), mask_distance(a, b) + mask_distance(b, c) + 1e-15);
        EXPECT_GE(mask_distance(a, b), 0.0);
        EXPECT_LE(mask_distance(a, b), 1.0);
    }
}

TEST(MaskDistance, MismatchIsUsageError) {
    EXPECT_THROW(mask_distance(single({1, 0}), single({1, 0, 1})), UsageError);
    EXPECT_THROW(mask_distance(single({1, 0}), PruneMask({{"other", {1, 0}}}, 0.5)), UsageError);
}

TEST(ApplyMask, AllKeepLeavesModelUnchanged) {
    Model model = harness::build_model("mlp-bn", {2}, 4, 2);
    const Model before = model;
    apply_mask_permanently(model, build_mask(model, representative_set(model), 0.0));
    EXPECT_EQ(model.checksum(), before.checksum());
    for (std::size_t i = 0; i < model.parameters().size(); ++i)
        EXPECT_EQ(*model.parameters()[i], *std::as_const(before).parameters()[i]);
}

TEST(ApplyMask, PrunedElementsStayZeroAcrossFiveEpochs) {
    const auto ds = harness::make_dataset("blobs2d", 5);
    for (double p : {0.5, 1.0}) {
        Model model = harness::build_model("mlp-bn", ds.sample_shape(), ds.num_classes, 5);
        nn::Rng rng(5);
        nn::train_epoch(model, ds.train, ds.batch_size, 0.01, rng, 1);
        const auto mask = build_mask(model, representative_set(model), p);
        apply_mask_permanently(model, mask);
        for (int epoch = 2; epoch <= 6; ++epoch) {
            nn::train_epoch(model, ds.train, ds.batch_size, 0.05, rng, epoch);
            for (const auto& entry : mask.entries()) {
                const auto* param = model.find(entry.path);
                for (std::size_t i = 0; i < entry.bits.size(); ++i)
                    if (entry.bits[i]) EXPECT_EQ(param->value[i], 0.0) << entry.path << "[" << i << "]";
            }
        }
    }
}

TEST(TruncateGradients, TouchesExactlyMaskedElements) {
    nn::Rng rng(9);
    Model model = harness::build_model("mlp-bn", {2}, 3, 9);
    model.backward(nn::softmax_cross_entropy(model.forward(ticketlab::testing::random_tensor({6, 2}, rng)),
                                             std::vector<int>{0, 1, 2, 0, 1, 2})
                       .grad);
    const auto mask = build_mask(model, representative_set(model), 0.5);
    std::vector<Tensor> before;
    for (const auto* p : std::as_const(model).parameters()) before.push_back(p->grad);

    truncate_gradients(model, mask, 0.003);
    const auto params = model.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto* entry = mask.find(params[k]->path);
        for (std::size_t i = 0; i < params[k]->size(); ++i) {
            const bool masked = entry && entry->bits[i];
            EXPECT_EQ(params[k]->grad[i], masked ? 0.003 * before[k][i] : before[k][i]) << params[k]->path;
        }
    }
}

TEST(TruncateGradients, Examples) {
    Model model = bn_model({0.1, 2.0});
    auto* gamma = model.find("bn.gamma");
    gamma->grad = Tensor({2}, {1.0, 1.0});
    truncate_gradients(model, single({0, 0}), 0.003);
    EXPECT_EQ(gamma->grad, Tensor({2}, {1.0, 1.0}));
    truncate_gradients(model, single({1, 0}), 1.0);
    EXPECT_EQ(gamma->grad, Tensor({2}, {1.0, 1.0}));
    truncate_gradients(model, single({1, 0}), 0.003);
    EXPECT_EQ(gamma->grad[0], 0.003);
    EXPECT_EQ(gamma->grad[1], 1.0);
}

TEST(MaskIo, RoundTrip) {
    const Model model = harness::build_model("cnn-bn", {1, 8, 8}, 4, 3);
    const auto mask = build_mask(model, representative_set(model), 0.3);
    std::stringstream buffer;
    write_mask(buffer, mask);
    EXPECT_EQ(read_mask(buffer), mask);
}

TEST(MaskIo, Layout) {
    std::stringstream buffer;
    write_mask(buffer, PruneMask({{"bn.gamma", {0, 1, 1}}}, 0.5));
    EXPECT_EQ(buffer.str(), "bn.gamma 3 0.5\n011\n");
}

TEST(MaskIo, MalformedInputIsParseError) {
    for (const char* text : {"bn.gamma 3 0.5\n01\n", "bn.gamma 3 0.5\n012\n", "bn.gamma x 0.5\n011\n",
                             "bn.gamma 3\n011\n", "bn.gamma 3 0.5\n"}) {
        std::stringstream buffer(text);
        EXPECT_THROW(read_mask(buffer), ParseError) << text;
    }
}

TEST(MaskIo, MissingFileIsIoError) {
    EXPECT_THROW(load_mask("/nonexistent/dir/mask.txt"), IoError);
}
