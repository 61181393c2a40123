#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace ticketlab::nn {

/// Seeded generator with platform-independent conversions. The standard
/// distributions are implementation-defined, so uniform/normal draws are
/// derived from raw 64-bit engine output here instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal();

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a purpose tag.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

}  // namespace ticketlab::nn
