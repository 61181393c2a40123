#pragma once

#include <cstddef>
#include <deque>

#include "ticketlab/pruning/mask.hpp"

namespace ticketlab::search {

struct WindowStats {
    double d_max = 1.0;
    double d_avg = 1.0;
    bool full = false;  // window held exactly `capacity` masks

    friend bool operator==(const WindowStats&, const WindowStats&) = default;
};

/// The most recent sampled masks, oldest first, excluding the current one.
class MaskWindow {
public:
    struct Slot {
        int epoch;
        pruning::PruneMask mask;
    };

    explicit MaskWindow(std::size_t capacity);

    /// Appends a mask, evicting the oldest once `capacity` is exceeded.
    void push(int epoch, pruning::PruneMask mask);

    std::size_t size() const noexcept { return slots_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    bool full() const noexcept { return slots_.size() == capacity_; }
    const std::deque<Slot>& slots() const noexcept { return slots_; }

private:
    std::size_t capacity_;
    std::deque<Slot> slots_;
};

/// Max and mean distance from `current` to every mask in the window. An
/// empty window yields d_max = d_avg = 1 and full = false.
WindowStats window_stats(const pruning::PruneMask& current, const MaskWindow& window);

/// Full window and d_max < s.
bool check_convergence(const WindowStats& stats, double s);

/// Full window and d_avg < s + delta.
bool check_trigger(const WindowStats& stats, double s, double delta);

}  // namespace ticketlab::search
