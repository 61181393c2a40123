#include "ticketlab/search/window.hpp"

#include <algorithm>

#include "ticketlab/errors.hpp"

namespace ticketlab::search {

MaskWindow::MaskWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("window length must be at least 1");
}

void MaskWindow::push(int epoch, pruning::PruneMask mask) {
    slots_.push_back({epoch, std::move(mask)});
    if (slots_.size() > capacity_) slots_.pop_front();
}

WindowStats window_stats(const pruning::PruneMask& current, const MaskWindow& window) {
    if (window.size() == 0) return {};
    WindowStats stats{0.0, 0.0, window.full()};
    for (const auto& slot : window.slots()) {
        const double d = pruning::mask_distance(current, slot.mask);
        stats.d_max = std::max(stats.d_max, d);
        stats.d_avg += d;
    }
    stats.d_avg /= static_cast<double>(window.size());
    // the rounded mean can exceed the max by an ulp when all distances are equal
    stats.d_avg = std::min(stats.d_avg, stats.d_max);
    return stats;
}

bool check_convergence(const WindowStats& stats, double s) { return stats.full && stats.d_max < s; }

bool check_trigger(const WindowStats& stats, double s, double delta) {
    return stats.full && stats.d_avg < s + delta;
}

}  // namespace ticketlab::search
