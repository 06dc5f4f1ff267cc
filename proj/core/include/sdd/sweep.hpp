// Config-grid execution and cross-seed summarization.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdd/pipeline.hpp"

namespace sdd {

struct RunOutcome {
  RunConfig config;
  uint64_t config_hash = 0;
  bool ok = false;
  std::string error;  // set when !ok
  std::vector<RoundRecord> rounds;
  std::string dir;
};

// Runs every config (worker pool of `parallelism` threads). Individual
// run failures are recorded and the sweep continues. Two configs writing
// to the same output directory raise InputError before anything runs.
std::vector<RunOutcome> run_sweep(const std::vector<RunConfig>& configs,
                                  int parallelism);

// A parsed grid file: the base config plus `sweep.<key> = v1,v2,...` axes
// expanded into the cartesian product. Each run's output directory is
// out/<axis-value suffix>.
std::vector<RunConfig> expand_grid_file(const std::string& path);

struct SummaryOptions {
  bool apply_early_stop = false;
  int patience = 2;
  double tol = 0.02;
  // CO2 factors; both must be set (> 0) for the co2 column to be emitted.
  double flops_per_joule = 0.0;
  double grams_co2_per_kwh = 0.0;
};

// One row per config group (config modulo seed and output dir), plus a
// second early-stopped row per group when apply_early_stop is set.
// flops/co2/accuracy/sparsity aggregate over the group's seeds at the
// selected round (final round, or the early-stop round).
struct SummaryRow {
  std::string group_label;
  uint64_t group_hash = 0;
  bool early_stop = false;
  bool distilled = false;
  bool pruned_teacher = false;
  int seeds = 0;
  double flops_mean = 0.0;
  double co2_mean_g = -1.0;  // negative when factors unset
  double test_acc_mean = 0.0;
  double test_acc_std = 0.0;
  double sparsity_mean = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<RunOutcome>& outcomes,
                                  const SummaryOptions& opts);

// Columns: group,early_stop,distilled,pruned_teacher,seeds,flops,co2_g,
// test_acc_mean,test_acc_std,sparsity.
void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows);
std::string format_summary_table(const std::vector<SummaryRow>& rows);

}  // namespace sdd
