#include <gtest/gtest.h>

#include <algorithm>

#include "ticketlab/errors.hpp"
#include "ticketlab/harness/architectures.hpp"
#include "ticketlab/harness/dataset.hpp"
#include "ticketlab/nn/layers.hpp"
#include "ticketlab/search/ticket_search.hpp"
#include "ticketlab/search/window.hpp"

using namespace ticketlab;
using namespace ticketlab::search;
using nn::Model;
using pruning::PruneMask;

namespace {

PruneMask bits(std::vector<std::uint8_t> b) { return PruneMask({{"g", std::move(b)}}, 0.5); }

/// A mask with the first k of n bits flipped relative to all-zero.
PruneMask flipped(std::size_t n, std::size_t k) {
    std::vector<std::uint8_t> b(n, 0);
    std::fill_n(b.begin(), k, 1);
    return bits(std::move(b));
}

SearchConfig synthetic_config(SearchMode mode) {
    SearchConfig c;
    c.mode = mode;
    c.window = 5;
    c.max_epochs = 40;
    return c;
}

}  // namespace

TEST(WindowStats, EmptyWindowIsSentinel) {
    const MaskWindow window(3);
    EXPECT_EQ(window_stats(flipped(4, 0), window), (WindowStats{1.0, 1.0, false}));
}

TEST(WindowStats, DuplicatedCurrentGivesZero) {
    MaskWindow window(2);
    window.push(1, flipped(10, 3));
    window.push(2, flipped(10, 3));
    const auto stats = window_stats(flipped(10, 3), window);
    EXPECT_EQ(stats.d_max, 0.0);
    EXPECT_EQ(stats.d_avg, 0.0);
    EXPECT_TRUE(stats.full);
}

TEST(WindowStats, MaxAndMean) {
    MaskWindow window(2);
    window.push(1, flipped(10, 2));
    window.push(2, flipped(10, 4));
    const auto stats = window_stats(flipped(10, 0), window);
    EXPECT_DOUBLE_EQ(stats.d_max, 0.4);
    EXPECT_DOUBLE_EQ(stats.d_avg, 0.3);
}

TEST(WindowStats, MeanNeverExceedsMax) {
    nn::Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        MaskWindow window(1 + rng.below(6));
        for (int e = 0; e < 7; ++e) window.push(e, flipped(23, rng.below(24)));
        const auto stats = window_stats(flipped(23, rng.below(24)), window);
        EXPECT_LE(stats.d_avg, stats.d_max);
    }
}

TEST(MaskWindow, EvictsOldestFirst) {
    MaskWindow window(3);
    for (int e = 1; e <= 5; ++e) window.push(e, flipped(4, 0));
    ASSERT_EQ(window.size(), 3u);
    EXPECT_EQ(window.slots().front().epoch, 3);
    EXPECT_EQ(window.slots().back().epoch, 5);
}

TEST(Convergence, Examples) {
    MaskWindow window(5);
    // distances 0.09, 0.08, 0.095, 0.07, 0.05 over 200 bits
    for (std::size_t k : {18u, 16u, 19u, 14u, 10u}) window.push(0, flipped(200, k));
    const auto stats = window_stats(flipped(200, 0), window);
    EXPECT_DOUBLE_EQ(stats.d_max, 0.095);
    EXPECT_TRUE(check_convergence(stats, 0.1));

    EXPECT_FALSE(check_convergence(WindowStats{0.0, 0.0, false}, 0.1));
    EXPECT_FALSE(check_convergence(WindowStats{0.1, 0.05, true}, 0.1));
}

TEST(Trigger, Examples) {
    EXPECT_TRUE(check_trigger(WindowStats{0.2, 0.12, true}, 0.1, 0.05));
    EXPECT_TRUE(check_trigger(WindowStats{0.05, 0.05, true}, 0.1, 0.0));
    EXPECT_FALSE(check_trigger(WindowStats{0.0, 0.0, false}, 0.1, 0.05));
    EXPECT_FALSE(check_trigger(WindowStats{0.2, 0.16, true}, 0.1, 0.05));
}

TEST(SearchConfig, Validation) {
    SearchConfig ok;
    EXPECT_NO_THROW(ok.validate());
    auto bad = [&](auto mutate) {
        SearchConfig c;
        mutate(c);
        EXPECT_THROW(c.validate(), ConfigError);
    };
    bad([](SearchConfig& c) { c.s = 0.0; });
    bad([](SearchConfig& c) { c.s = 1.0; });
    bad([](SearchConfig& c) { c.delta = -0.01; });
    bad([](SearchConfig& c) { c.p = 1.1; });
    bad([](SearchConfig& c) { c.window = 0; });
    bad([](SearchConfig& c) { c.window = 40; });
    bad([](SearchConfig& c) { c.r_trunc = 0.0; });
    bad([](SearchConfig& c) { c.max_epochs = 1; });
}

TEST(SearchMode, ParseAndPrint) {
    for (auto m : {SearchMode::kEb, SearchMode::kWorm, SearchMode::kAlways})
        EXPECT_EQ(parse_search_mode(to_string(m)), m);
    EXPECT_THROW(parse_search_mode("fast"), ConfigError);
}

TEST(SearchState, WindowHoldsPreviousMasksOnly) {
    SearchState state(synthetic_config(SearchMode::kEb));
    nn::Rng rng(1);
    for (int t = 1; t <= 12; ++t) {
        std::vector<int> epochs;
        for (const auto& slot : state.window().slots()) epochs.push_back(slot.epoch);
        std::vector<int> expected;
        for (int e = std::max(1, t - 5); e <= t - 1; ++e) expected.push_back(e);
        EXPECT_EQ(epochs, expected) << "epoch " << t;
        const auto step = state.observe(flipped(50, rng.below(51)));
        EXPECT_EQ(step.stats.full, t >= 6);
    }
}

TEST(SearchState, NoStopBeforeWindowFills) {
    SearchState state(synthetic_config(SearchMode::kWorm));
    for (int t = 1; t <= 5; ++t) {
        const auto step = state.observe(flipped(10, 0));
        EXPECT_FALSE(step.stop);
        EXPECT_FALSE(step.trigger);
    }
    const auto step = state.observe(flipped(10, 0));
    EXPECT_TRUE(step.stop);
    EXPECT_EQ(state.trigger_epoch(), 6);
    EXPECT_THROW(state.observe(flipped(10, 0)), UsageError);
}

TEST(SearchState, TriggerLatches) {
    auto config = synthetic_config(SearchMode::kWorm);
    SearchState state(config);
    EXPECT_EQ(state.active_r(), 1.0);
    // identical masks: trigger and stop coincide at the first full-window epoch
    for (int t = 1; t <= 6; ++t) state.observe(flipped(100, 0));
    EXPECT_EQ(state.trigger_epoch(), 6);
    EXPECT_TRUE(state.stopped());

    SearchState s2(config);
    for (int t = 1; t <= 5; ++t) s2.observe(flipped(100, t % 2 ? 0 : 20));
    // d to {0,20,0,20,0} from 10: all 0.1 -> avg 0.1 < 0.15 trigger, max 0.1 not < 0.1
    auto step = s2.observe(flipped(100, 10));
    EXPECT_TRUE(step.trigger);
    EXPECT_FALSE(step.stop);
    EXPECT_EQ(s2.trigger_epoch(), 6);
    EXPECT_EQ(s2.active_r(), config.r_trunc);
    for (int t = 7; t <= 12; ++t) {
        step = s2.observe(flipped(100, t % 2 ? 90 : 0));
        EXPECT_FALSE(step.trigger);
        EXPECT_EQ(s2.active_r(), config.r_trunc);
        EXPECT_EQ(s2.trigger_epoch(), 6);
    }
}

TEST(SearchState, EbNeverTruncates) {
    SearchState state(synthetic_config(SearchMode::kEb));
    for (int t = 1; t <= 5; ++t) state.observe(flipped(100, t % 2 ? 0 : 20));
    EXPECT_TRUE(state.observe(flipped(100, 10)).trigger);
    EXPECT_EQ(state.active_r(), 1.0);
    EXPECT_EQ(state.trigger_epoch(), std::nullopt);
}

TEST(SearchState, GoverningMaskIsLatestSample) {
    SearchState state(synthetic_config(SearchMode::kAlways));
    EXPECT_EQ(state.governing_mask(), nullptr);
    EXPECT_EQ(state.active_r(), 0.003);
    state.observe(flipped(8, 3));
    EXPECT_EQ(*state.governing_mask(), flipped(8, 3));
    state.observe(flipped(8, 5));
    EXPECT_EQ(*state.governing_mask(), flipped(8, 5));
}

TEST(SearchState, MatchesBruteForceOnSyntheticSequences) {
    nn::Rng rng(42);
    for (int trial = 0; trial < 300; ++trial) {
        SearchConfig config = synthetic_config(SearchMode::kWorm);
        config.window = 1 + static_cast<int>(rng.below(6));
        config.s = rng.uniform(0.02, 0.3);
        config.delta = rng.uniform(0.0, 0.1);
        config.max_epochs = 30;

        // drifting masks whose jumps shrink over time
        std::vector<PruneMask> history;
        std::vector<std::uint8_t> current(40, 0);
        for (int t = 0; t < config.max_epochs; ++t) {
            const std::size_t flips = rng.below(static_cast<std::uint64_t>(std::max(1, 12 - t / 2)));
            for (std::size_t f = 0; f < flips; ++f) current[rng.below(40)] ^= 1;
            history.push_back(bits(current));
        }

        auto brute = [&](int t, bool want_avg) -> std::optional<double> {
            // t is 1-based; window = epochs t-l .. t-1
            if (t - 1 < config.window) return std::nullopt;
            double mx = 0.0, sum = 0.0;
            for (int e = t - config.window; e <= t - 1; ++e) {
                const double d = pruning::mask_distance(history[t - 1], history[e - 1]);
                mx = std::max(mx, d);
                sum += d;
            }
            return want_avg ? sum / config.window : mx;
        };
        int expected_stop = 0;
        std::optional<int> expected_trigger;
        for (int t = 1; t <= config.max_epochs; ++t) {
            const auto avg = brute(t, true);
            if (!expected_trigger && avg && *avg < config.s + config.delta) expected_trigger = t;
            const auto mx = brute(t, false);
            if (mx && *mx < config.s) {
                expected_stop = t;
                break;
            }
        }

        SearchState state(config);
        int stop = 0;
        for (int t = 1; t <= config.max_epochs; ++t) {
            if (state.observe(history[t - 1]).stop) {
                stop = t;
                break;
            }
        }
        EXPECT_EQ(stop, expected_stop) << "trial " << trial;
        EXPECT_EQ(state.trigger_epoch(), expected_trigger) << "trial " << trial;
        if (stop) {
            ASSERT_TRUE(state.trigger_epoch());
            EXPECT_LE(*state.trigger_epoch(), stop);
        }
    }
}

TEST(TicketSearch, EbEqualsWormWithUnitTruncation) {
    const auto ds = harness::make_dataset("blobs2d", 2);
    SearchConfig eb;
    eb.seed = 2;
    SearchConfig worm = eb;
    worm.mode = SearchMode::kWorm;
    worm.r_trunc = 1.0;

    Model a = harness::build_model("mlp-bn", ds.sample_shape(), ds.num_classes, 2);
    Model b = a;
    const auto ra = ticket_search(eb, a, ds.train, ds.val, ds.batch_size);
    const auto rb = ticket_search(worm, b, ds.train, ds.val, ds.batch_size);
    EXPECT_EQ(ra.mask_history, rb.mask_history);
    EXPECT_EQ(ra.per_epoch, rb.per_epoch);
    EXPECT_EQ(ra.stop_epoch, rb.stop_epoch);
    EXPECT_EQ(a.checksum(), b.checksum());
}

TEST(TicketSearch, ConvergedRunsSatisfyInvariants) {
    const auto ds = harness::make_dataset("blobs2d", 4);
    for (auto mode : {SearchMode::kEb, SearchMode::kWorm}) {
        SearchConfig config;
        config.mode = mode;
        config.seed = 4;
        Model model = harness::build_model("mlp-bn", ds.sample_shape(), ds.num_classes, 4);
        const auto result = ticket_search(config, model, ds.train, ds.val, ds.batch_size);
        ASSERT_TRUE(result.converged);
        EXPECT_LE(result.stop_epoch, config.max_epochs);
        EXPECT_LT(result.per_epoch.back().stats.d_max, config.s);
        EXPECT_EQ(result.candidate_mask, result.mask_history.back());
        EXPECT_EQ(static_cast<int>(result.per_epoch.size()), result.stop_epoch);
        if (mode == SearchMode::kWorm) {
            ASSERT_TRUE(result.trigger_epoch);
            EXPECT_LE(*result.trigger_epoch, result.stop_epoch);
            for (const auto& rec : result.per_epoch)
                EXPECT_EQ(rec.active_r, rec.epoch > *result.trigger_epoch ? config.r_trunc : 1.0);
        }
    }
}

TEST(TicketSearch, NonConvergenceIsReported) {
    const auto ds = harness::make_dataset("blobs2d", 1);
    SearchConfig config;
    config.s = 1e-9;
    config.window = 2;
    config.max_epochs = 4;
    Model model = harness::build_model("mlp-bn", ds.sample_shape(), ds.num_classes, 1);
    const auto result = ticket_search(config, model, ds.train, ds.val, ds.batch_size);
    EXPECT_FALSE(result.converged);
    EXPECT_EQ(result.stop_epoch, 4);
    EXPECT_EQ(result.candidate_mask, result.mask_history.back());
}

TEST(TicketSearch, ModelWithoutRepresentativesRejected) {
    nn::Rng rng(1);
    nn::Model model({2});
    model.emplace<nn::Dense>("fc", 2, 4, rng);
    const auto ds = harness::make_dataset("blobs2d", 1);
    EXPECT_THROW(ticket_search(SearchConfig{}, model, ds.train, ds.val, ds.batch_size), ConfigError);
}
