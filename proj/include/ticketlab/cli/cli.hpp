#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ticketlab/search/ticket_search.hpp"

namespace ticketlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Everything needed to reproduce one command's results.
struct RunSpec {
    search::SearchConfig config;
    std::string arch;
    std::string dataset;  // empty: the architecture's default dataset
    int retrain_budget = 20;
    std::string out = ".";
    std::vector<std::uint64_t> seeds;  // compare/sweep
    std::vector<double> r_values;      // sweep
    bool dump_masks = false;

    friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

/// Flat `key=value` text keyed by flag names; accepted back through --config.
void write_runspec(std::ostream& out, const RunSpec& spec);

/// Entry point shared by the executable and the tests. `argv[0]` is the
/// program name, `argv[1]` the command.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace ticketlab::cli
