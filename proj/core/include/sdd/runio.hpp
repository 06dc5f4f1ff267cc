// Run-directory artifacts. Layout under a run's output directory:
//   round-<k>.ckpt        one checkpoint per pruning round
//   rounds.csv            header + one row per round,
//                         columns: round,sparsity,train_acc,val_acc,
//                         test_acc,test_loss,epochs,flops,checkpoint_path
//   config.resolved.cfg   canonical config, first line '# config-hash = ...'
//
// checkpoint_path entries are run-relative so the CSV bytes do not depend
// on where the directory lives. Numbers use %.12g with '.' decimals.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdd/config.hpp"
#include "sdd/prune.hpp"

namespace sdd {

extern const char kRoundsCsvHeader[];  // without trailing newline

void write_rounds_csv(const std::string& path,
                      const std::vector<RoundRecord>& records);
std::vector<RoundRecord> read_rounds_csv(const std::string& path);

void write_resolved_config(const RunConfig& cfg, const std::string& dir);

struct ResolvedConfig {
  RunConfig config;
  uint64_t hash = 0;
};
ResolvedConfig read_resolved_config(const std::string& dir);

std::string round_checkpoint_name(int round);

}  // namespace sdd
