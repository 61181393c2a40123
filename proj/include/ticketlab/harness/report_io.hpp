#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ticketlab/harness/experiment.hpp"

namespace ticketlab::harness {

inline constexpr int kSchemaVersion = 1;

/// Header `epoch,phase,train_loss,train_acc,val_acc,d_max,d_avg,active_r`,
/// one row per epoch, empty cells for absent values.
void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& metrics);
std::vector<EpochMetrics> read_metrics_csv(std::istream& in);

// Report files: `key=value` lines starting with schema_version and kind,
// followed by one embedded CSV section between `[name]` and `[end]`.
// Readers throw SchemaVersionError on a version mismatch, ParseError on
// malformed content, IoError when the file cannot be read or written.

void write_report(std::ostream& out, const ExperimentReport& report);
void write_report(std::ostream& out, const ComparisonReport& report);
void write_report(std::ostream& out, const SweepReport& report);

ExperimentReport read_experiment_report(std::istream& in);
ComparisonReport read_comparison_report(std::istream& in);
SweepReport read_sweep_report(std::istream& in);

template <typename Report>
void persist(const Report& report, const std::filesystem::path& path);

ExperimentReport load_experiment_report(const std::filesystem::path& path);
ComparisonReport load_comparison_report(const std::filesystem::path& path);
SweepReport load_sweep_report(const std::filesystem::path& path);

void save_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics);
std::vector<EpochMetrics> load_metrics_csv(const std::filesystem::path& path);

}  // namespace ticketlab::harness
