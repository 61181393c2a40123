#include "ticketlab/search/ticket_search.hpp"

#include <cmath>
#include <string>

#include "ticketlab/errors.hpp"

namespace ticketlab::search {

std::string_view to_string(SearchMode mode) {
    switch (mode) {
        case SearchMode::kEb: return "eb";
        case SearchMode::kWorm: return "worm";
        case SearchMode::kAlways: return "always";
    }
    return "eb";
}

SearchMode parse_search_mode(std::string_view text) {
    if (text == "eb") return SearchMode::kEb;
    if (text == "worm") return SearchMode::kWorm;
    if (text == "always") return SearchMode::kAlways;
    throw ConfigError("unknown search mode '" + std::string(text) + "' (expected eb, worm or always)");
}

void SearchConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (!(p >= 0.0 && p <= 1.0)) fail("p must lie in [0, 1], got " + std::to_string(p));
    if (!(s > 0.0 && s < 1.0)) fail("s must lie in (0, 1), got " + std::to_string(s));
    if (!(delta >= 0.0) || !std::isfinite(delta)) fail("delta must be >= 0, got " + std::to_string(delta));
    if (!(r_trunc > 0.0 && r_trunc <= 1.0)) fail("r must lie in (0, 1], got " + std::to_string(r_trunc));
    if (max_epochs < 2) fail("max-epochs must be at least 2, got " + std::to_string(max_epochs));
    if (window < 1 || window >= max_epochs) {
        fail("window length l must satisfy 1 <= l < max-epochs, got " + std::to_string(window));
    }
    if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be a finite non-negative number");
}

SearchState::SearchState(const SearchConfig& config)
    : config_(config),
      window_(static_cast<std::size_t>(config.window)),
      active_r_(config.mode == SearchMode::kAlways ? config.r_trunc : 1.0) {
    config_.validate();
}

SearchState::Step SearchState::observe(pruning::PruneMask mask) {
    if (stopped_) throw UsageError("search already stopped");
    Step step;
    step.epoch = ++epoch_;
    step.stats = window_stats(mask, window_);
    step.stop = check_convergence(step.stats, config_.s);
    step.trigger = check_trigger(step.stats, config_.s, config_.delta);
    if (config_.mode == SearchMode::kWorm && step.trigger && !trigger_epoch_) {
        trigger_epoch_ = step.epoch;
        active_r_ = config_.r_trunc;
    }
    stopped_ = step.stop;
    window_.push(step.epoch, mask);
    latest_ = std::move(mask);
    return step;
}

TicketResult ticket_search(const SearchConfig& config, nn::Model& model, const nn::Split& train,
                           const nn::Split& val, std::size_t batch_size, const EpochObserver& observer) {
    config.validate();
    const auto reps = pruning::representative_set(model);
    if (reps.paths.empty()) throw ConfigError("model has no representative parameters");

    SearchState state(config);
    nn::Rng shuffle_rng(nn::derive_seed(config.seed, "search-shuffle"));
    TicketResult result;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const double r = state.active_r();
        const pruning::PruneMask* governing = state.governing_mask();
        auto hook = [&](nn::Model& m) {
            if (governing) pruning::truncate_gradients(m, *governing, r);
        };
        const auto train_summary =
            nn::train_epoch(model, train, batch_size, config.lr, shuffle_rng, epoch, hook);
        const auto val_summary = nn::evaluate(model, val, batch_size);

        auto mask = pruning::build_mask(model, reps, config.p);
        result.mask_history.push_back(mask);
        const auto step = state.observe(std::move(mask));

        EpochRecord record{epoch, step.stats, r, train_summary.loss, train_summary.accuracy,
                           val_summary.accuracy};
        result.per_epoch.push_back(record);
        if (observer) observer(record);
        if (step.stop) break;
    }

    result.stop_epoch = state.epoch();
    result.converged = state.stopped();
    result.trigger_epoch = state.trigger_epoch();
    result.candidate_mask = *state.governing_mask();
    return result;
}

}  // namespace ticketlab::search
