#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ticketlab/harness/dataset.hpp"
#include "ticketlab/search/ticket_search.hpp"

namespace ticketlab::harness {

enum class MetricsPhase { kSearch, kRetrain };

std::string_view to_string(MetricsPhase phase);

/// One row of the metrics log. Epochs count globally: search epochs first,
/// retrain epochs continue the numbering.
struct EpochMetrics {
    int epoch = 0;
    MetricsPhase phase = MetricsPhase::kSearch;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    std::optional<double> d_max;  // search rows only
    std::optional<double> d_avg;  // search rows only
    double active_r = 1.0;

    friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct ExperimentReport {
    search::SearchConfig config;
    std::string arch;
    std::string dataset;
    int retrain_budget = 0;
    std::uint64_t init_checksum = 0;  // parameters before the first update

    int search_epochs = 0;
    bool converged = false;
    std::optional<int> trigger_epoch;
    double pre_pruned_acc = 0.0;       // dense model, at the stop epoch
    double post_prune_acc = 0.0;       // after permanent pruning, before retraining
    double retrain_acc_after_1 = 0.0;  // after one retrain epoch (post-prune if budget is 0)
    std::optional<int> restore_epochs;
    bool retrain_diverged = false;
    std::vector<EpochMetrics> metrics;

    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

inline constexpr double kRestoreFraction = 0.9;
inline constexpr int kDefaultRetrainBudget = 20;

/// Retrain epochs needed for val accuracy to reach 90% of `pre_pruned_acc`:
/// 0 if the pruned model already does, otherwise the 1-based index of the
/// first qualifying retrain row in `metrics`; empty if none qualifies.
std::optional<int> compute_restore_epochs(double pre_pruned_acc, double post_prune_acc,
                                          const std::vector<EpochMetrics>& metrics);

/// Search, prune permanently, retrain. The model is built from `arch` and config.seed.
ExperimentReport run_experiment(const search::SearchConfig& config, std::string_view arch,
                                const Dataset& dataset, int retrain_budget = kDefaultRetrainBudget,
                                search::TicketResult* search_out = nullptr);

/// As above, starting from a caller-supplied initialization.
ExperimentReport run_experiment(const search::SearchConfig& config, std::string_view arch, nn::Model model,
                                const Dataset& dataset, int retrain_budget = kDefaultRetrainBudget,
                                search::TicketResult* search_out = nullptr);

/// The comparison-table columns of one run.
struct RunSummary {
    int search_epochs = 0;
    bool converged = false;
    std::optional<int> trigger_epoch;
    double pre_pruned_acc = 0.0;
    double post_prune_acc = 0.0;
    double retrain_acc_after_1 = 0.0;
    std::optional<int> restore_epochs;
    std::uint64_t init_checksum = 0;

    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

RunSummary summarize(const ExperimentReport& report);

struct PairedRow {
    std::uint64_t seed = 0;
    RunSummary eb;
    RunSummary worm;

    friend bool operator==(const PairedRow&, const PairedRow&) = default;
};

/// second - first, per column. The restore delta is empty unless both runs restored.
struct PairedDelta {
    double search_epochs = 0.0;
    double pre_pruned_acc = 0.0;
    double post_prune_acc = 0.0;
    double retrain_acc_after_1 = 0.0;
    std::optional<double> restore_epochs;
};

PairedDelta paired_delta(const PairedRow& row);

struct ComparisonReport {
    search::SearchConfig eb_config;
    search::SearchConfig worm_config;
    std::string arch;
    std::string dataset;
    int retrain_budget = 0;
    std::vector<PairedRow> rows;  // ascending seed

    friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

struct SummaryMeans {
    double search_epochs = 0.0;
    double pre_pruned_acc = 0.0;
    double post_prune_acc = 0.0;
    double retrain_acc_after_1 = 0.0;
    std::optional<double> restore_epochs;  // over runs that restored
};

SummaryMeans mean_of(const std::vector<RunSummary>& runs);

struct ComparisonMeans {
    SummaryMeans eb;
    SummaryMeans worm;
    PairedDelta delta;  // mean of per-seed deltas (worm - eb)
};

ComparisonMeans comparison_means(const ComparisonReport& report);

/// Runs EB and WORM from one shared initialization per seed. Both configs
/// must agree on everything except mode, r_trunc and delta; their seed
/// fields are replaced by each entry of `seeds`. Seeds are processed on up
/// to `jobs` threads; rows come back in ascending seed order.
ComparisonReport compare_paired(const search::SearchConfig& eb_config, const search::SearchConfig& worm_config,
                                std::string_view arch, std::string_view dataset_name,
                                const std::vector<std::uint64_t>& seeds,
                                int retrain_budget = kDefaultRetrainBudget, unsigned jobs = 1);

struct SweepRow {
    double r = 1.0;
    RunSummary summary;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepReport {
    search::SearchConfig base_config;
    std::string arch;
    std::string dataset;
    int retrain_budget = 0;
    std::vector<SweepRow> rows;  // in r_values order

    friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

/// One experiment per r with truncation active from the first sampled mask
/// onward, without trigger gating. All rows share base_config.seed and its
/// initialization.
SweepReport truncation_sweep(const std::vector<double>& r_values, const search::SearchConfig& base_config,
                             std::string_view arch, const Dataset& dataset,
                             int retrain_budget = kDefaultRetrainBudget);

}  // namespace ticketlab::harness
