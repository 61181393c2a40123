#include "ticketlab/harness/experiment.hpp"

#include <algorithm>
#include <future>
#include <string>

#include "ticketlab/errors.hpp"
#include "ticketlab/harness/architectures.hpp"
#include "ticketlab/pruning/mask.hpp"

namespace ticketlab::harness {

std::string_view to_string(MetricsPhase phase) {
    return phase == MetricsPhase::kSearch ? "search" : "retrain";
}

std::optional<int> compute_restore_epochs(double pre_pruned_acc, double post_prune_acc,
                                          const std::vector<EpochMetrics>& metrics) {
    const double threshold = kRestoreFraction * pre_pruned_acc;
    if (post_prune_acc >= threshold) return 0;
    int retrain_index = 0;
    for (const auto& m : metrics) {
        if (m.phase != MetricsPhase::kRetrain) continue;
        ++retrain_index;
        if (m.val_acc >= threshold) return retrain_index;
    }
    return std::nullopt;
}

ExperimentReport run_experiment(const search::SearchConfig& config, std::string_view arch,
                                const Dataset& dataset, int retrain_budget, search::TicketResult* search_out) {
    auto model = build_model(arch, dataset.sample_shape(), dataset.num_classes, config.seed);
    return run_experiment(config, arch, std::move(model), dataset, retrain_budget, search_out);
}

ExperimentReport run_experiment(const search::SearchConfig& config, std::string_view arch, nn::Model model,
                                const Dataset& dataset, int retrain_budget, search::TicketResult* search_out) {
    if (!is_known_arch(arch)) throw ConfigError("unknown architecture '" + std::string(arch) + "'");
    if (retrain_budget < 0) throw ConfigError("retrain budget must be >= 0");
    config.validate();

    ExperimentReport report;
    report.config = config;
    report.arch = std::string(arch);
    report.dataset = dataset.name;
    report.retrain_budget = retrain_budget;
    report.init_checksum = model.checksum();

    auto result = search::ticket_search(config, model, dataset.train, dataset.val, dataset.batch_size);
    report.search_epochs = result.stop_epoch;
    report.converged = result.converged;
    report.trigger_epoch = result.trigger_epoch;
    for (const auto& rec : result.per_epoch) {
        report.metrics.push_back({rec.epoch, MetricsPhase::kSearch, rec.train_loss, rec.train_acc, rec.val_acc,
                                  rec.stats.d_max, rec.stats.d_avg, rec.active_r});
    }

    report.pre_pruned_acc = nn::evaluate(model, dataset.val, dataset.batch_size).accuracy;
    pruning::apply_mask_permanently(model, result.candidate_mask);
    report.post_prune_acc = nn::evaluate(model, dataset.val, dataset.batch_size).accuracy;
    report.retrain_acc_after_1 = report.post_prune_acc;

    nn::Rng retrain_rng(nn::derive_seed(config.seed, "retrain-shuffle"));
    for (int k = 1; k <= retrain_budget; ++k) {
        const int epoch = report.search_epochs + k;
        nn::EpochSummary train_summary;
        try {
            train_summary = nn::train_epoch(model, dataset.train, dataset.batch_size, config.lr, retrain_rng, epoch);
        } catch (const TrainingDiverged&) {
            report.retrain_diverged = true;
            break;
        }
        const auto val_summary = nn::evaluate(model, dataset.val, dataset.batch_size);
        report.metrics.push_back({epoch, MetricsPhase::kRetrain, train_summary.loss, train_summary.accuracy,
                                  val_summary.accuracy, std::nullopt, std::nullopt, 1.0});
        if (k == 1) report.retrain_acc_after_1 = val_summary.accuracy;
    }
    report.restore_epochs = compute_restore_epochs(report.pre_pruned_acc, report.post_prune_acc, report.metrics);

    if (search_out) *search_out = std::move(result);
    return report;
}

RunSummary summarize(const ExperimentReport& report) {
    return {report.search_epochs,  report.converged,           report.trigger_epoch,
            report.pre_pruned_acc, report.post_prune_acc,      report.retrain_acc_after_1,
            report.restore_epochs, report.init_checksum};
}

PairedDelta paired_delta(const PairedRow& row) {
    PairedDelta d;
    d.search_epochs = row.worm.search_epochs - row.eb.search_epochs;
    d.pre_pruned_acc = row.worm.pre_pruned_acc - row.eb.pre_pruned_acc;
    d.post_prune_acc = row.worm.post_prune_acc - row.eb.post_prune_acc;
    d.retrain_acc_after_1 = row.worm.retrain_acc_after_1 - row.eb.retrain_acc_after_1;
    if (row.eb.restore_epochs && row.worm.restore_epochs) {
        d.restore_epochs = *row.worm.restore_epochs - *row.eb.restore_epochs;
    }
    return d;
}

SummaryMeans mean_of(const std::vector<RunSummary>& runs) {
    SummaryMeans m;
    if (runs.empty()) return m;
    double restore_total = 0.0;
    int restored = 0;
    for (const auto& r : runs) {
        m.search_epochs += r.search_epochs;
        m.pre_pruned_acc += r.pre_pruned_acc;
        m.post_prune_acc += r.post_prune_acc;
        m.retrain_acc_after_1 += r.retrain_acc_after_1;
        if (r.restore_epochs) {
            restore_total += *r.restore_epochs;
            ++restored;
        }
    }
    const auto n = static_cast<double>(runs.size());
    m.search_epochs /= n;
    m.pre_pruned_acc /= n;
    m.post_prune_acc /= n;
    m.retrain_acc_after_1 /= n;
    if (restored > 0) m.restore_epochs = restore_total / restored;
    return m;
}

ComparisonMeans comparison_means(const ComparisonReport& report) {
    ComparisonMeans means;
    std::vector<RunSummary> eb, worm;
    double restore_total = 0.0;
    int restore_pairs = 0;
    for (const auto& row : report.rows) {
        eb.push_back(row.eb);
        worm.push_back(row.worm);
        const auto d = paired_delta(row);
        means.delta.search_epochs += d.search_epochs;
        means.delta.pre_pruned_acc += d.pre_pruned_acc;
        means.delta.post_prune_acc += d.post_prune_acc;
        means.delta.retrain_acc_after_1 += d.retrain_acc_after_1;
        if (d.restore_epochs) {
            restore_total += *d.restore_epochs;
            ++restore_pairs;
        }
    }
    means.eb = mean_of(eb);
    means.worm = mean_of(worm);
    if (!report.rows.empty()) {
        const auto n = static_cast<double>(report.rows.size());
        means.delta.search_epochs /= n;
        means.delta.pre_pruned_acc /= n;
        means.delta.post_prune_acc /= n;
        means.delta.retrain_acc_after_1 /= n;
    }
    if (restore_pairs > 0) means.delta.restore_epochs = restore_total / restore_pairs;
    return means;
}

namespace {

void require_paired_configs(const search::SearchConfig& eb, const search::SearchConfig& worm) {
    auto normalized = [](search::SearchConfig c) {
        c.mode = search::SearchMode::kEb;
        c.r_trunc = 1.0;
        c.delta = 0.0;
        c.seed = 0;
        return c;
    };
    if (normalized(eb) != normalized(worm)) {
        throw ConfigError("paired configs may differ only in mode, r_trunc and delta");
    }
}

PairedRow run_pair(const search::SearchConfig& eb_config, const search::SearchConfig& worm_config,
                   std::string_view arch, std::string_view dataset_name, std::uint64_t seed, int retrain_budget) {
    const auto dataset = make_dataset(dataset_name, seed);
    const auto init = build_model(arch, dataset.sample_shape(), dataset.num_classes, seed);
    auto eb = eb_config;
    auto worm = worm_config;
    eb.seed = worm.seed = seed;
    PairedRow row;
    row.seed = seed;
    row.eb = summarize(run_experiment(eb, arch, init, dataset, retrain_budget));
    row.worm = summarize(run_experiment(worm, arch, init, dataset, retrain_budget));
    return row;
}

}  // namespace

ComparisonReport compare_paired(const search::SearchConfig& eb_config, const search::SearchConfig& worm_config,
                                std::string_view arch, std::string_view dataset_name,
                                const std::vector<std::uint64_t>& seeds, int retrain_budget, unsigned jobs) {
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    require_paired_configs(eb_config, worm_config);
    eb_config.validate();
    worm_config.validate();

    auto ordered = seeds;
    std::stable_sort(ordered.begin(), ordered.end());

    ComparisonReport report;
    report.eb_config = eb_config;
    report.worm_config = worm_config;
    report.arch = std::string(arch);
    report.dataset = std::string(dataset_name);
    report.retrain_budget = retrain_budget;
    report.rows.resize(ordered.size());

    const std::size_t width = std::max(1u, jobs);
    for (std::size_t start = 0; start < ordered.size(); start += width) {
        const std::size_t end = std::min(start + width, ordered.size());
        std::vector<std::future<PairedRow>> pending;
        for (std::size_t i = start; i < end; ++i) {
            pending.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async, run_pair,
                                         std::cref(eb_config), std::cref(worm_config), arch, dataset_name,
                                         ordered[i], retrain_budget));
        }
        for (std::size_t i = start; i < end; ++i) report.rows[i] = pending[i - start].get();
    }
    report.eb_config.seed = report.worm_config.seed = ordered.front();
    return report;
}

SweepReport truncation_sweep(const std::vector<double>& r_values, const search::SearchConfig& base_config,
                             std::string_view arch, const Dataset& dataset, int retrain_budget) {
    if (r_values.empty()) throw ConfigError("at least one r value is required");
    for (double r : r_values) {
        if (!(r > 0.0 && r <= 1.0)) throw ConfigError("sweep r values must lie in (0, 1], got " + std::to_string(r));
    }
    SweepReport report;
    report.base_config = base_config;
    report.base_config.mode = search::SearchMode::kAlways;
    report.arch = std::string(arch);
    report.dataset = dataset.name;
    report.retrain_budget = retrain_budget;

    const auto init = build_model(arch, dataset.sample_shape(), dataset.num_classes, base_config.seed);
    for (double r : r_values) {
        auto config = report.base_config;
        config.r_trunc = r;
        report.rows.push_back({r, summarize(run_experiment(config, arch, init, dataset, retrain_budget))});
    }
    return report;
}

}  // namespace ticketlab::harness
