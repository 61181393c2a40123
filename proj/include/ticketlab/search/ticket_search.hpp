#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "ticketlab/nn/model.hpp"
#include "ticketlab/nn/training.hpp"
#include "ticketlab/pruning/mask.hpp"
#include "ticketlab/search/window.hpp"

namespace ticketlab::search {

/// kEb never truncates. kWorm truncates once the average window distance
/// drops below s + delta. kAlways truncates from the first sampled mask on
/// (used by truncation sweeps).
enum class SearchMode { kEb, kWorm, kAlways };

std::string_view to_string(SearchMode mode);
SearchMode parse_search_mode(std::string_view text);

struct SearchConfig {
    SearchMode mode = SearchMode::kEb;
    double p = 0.5;          // prune ratio
    double s = 0.1;          // stopping point on d_max
    double delta = 0.05;     // trigger margin on d_avg
    int window = 5;          // number of previous masks compared against
    double r_trunc = 0.003;  // gradient fraction kept on masked elements
    int max_epochs = 40;
    double lr = 0.01;
    std::uint64_t seed = 1;

    /// Throws ConfigError naming the first field out of range.
    void validate() const;

    friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

/// The epoch-level state machine: feed it one sampled mask per epoch.
/// Independent of training so it can be driven by synthetic sequences.
class SearchState {
public:
    struct Step {
        int epoch = 0;
        WindowStats stats;
        bool stop = false;
        bool trigger = false;  // trigger condition held this epoch
    };

    explicit SearchState(const SearchConfig& config);

    Step observe(pruning::PruneMask mask);

    int epoch() const noexcept { return epoch_; }
    bool stopped() const noexcept { return stopped_; }
    std::optional<int> trigger_epoch() const noexcept { return trigger_epoch_; }

    /// Truncation factor for the next epoch's updates.
    double active_r() const noexcept { return active_r_; }

    /// Mask sampled at the end of the latest epoch; governs the next epoch's truncation.
    const pruning::PruneMask* governing_mask() const noexcept {
        return latest_ ? &*latest_ : nullptr;
    }

    const MaskWindow& window() const noexcept { return window_; }

private:
    SearchConfig config_;
    MaskWindow window_;
    std::optional<pruning::PruneMask> latest_;
    std::optional<int> trigger_epoch_;
    double active_r_;
    int epoch_ = 0;
    bool stopped_ = false;
};

struct EpochRecord {
    int epoch = 0;
    WindowStats stats;
    double active_r = 1.0;  // truncation factor applied during this epoch
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TicketResult {
    pruning::PruneMask candidate_mask;
    int stop_epoch = 0;  // epochs run
    std::optional<int> trigger_epoch;
    bool converged = false;
    std::vector<EpochRecord> per_epoch;
    std::vector<pruning::PruneMask> mask_history;  // one per epoch
};

using EpochObserver = std::function<void(const EpochRecord&)>;

/// Trains `model` epoch by epoch, sampling a mask after each epoch, until the
/// window converges or max_epochs elapse. Throws TrainingDiverged on a
/// non-finite loss.
TicketResult ticket_search(const SearchConfig& config, nn::Model& model, const nn::Split& train,
                           const nn::Split& val, std::size_t batch_size,
                           const EpochObserver& observer = {});

}  // namespace ticketlab::search
