// Iterative magnitude-pruning pipeline: train dense, then repeatedly
// prune the smallest surviving weights and retrain with the same policy
// (weights carry over, momentum restarts each round) until the target
// sparsity is reached. Every round emits a checkpoint plus a CSV row.
//
// imp_run is resumable and idempotent: re-invoking it on an output
// directory that already holds rounds for the identical config continues
// after the last complete round (or returns immediately when done);
// a directory holding a different config raises InputError.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdd/config.hpp"
#include "sdd/dataset.hpp"
#include "sdd/prune.hpp"
#include "sdd/train.hpp"

namespace sdd {

struct PruneRun {
  RunConfig config;
  uint64_t config_hash = 0;
  std::string dir;
  std::vector<RoundRecord> rounds;
};

// Train/val/test triple assembled per the config; noise is injected into
// the training split only, after splitting.
struct DataBundle {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;
};
DataBundle assemble_data(const RunConfig& cfg);

PruneRun imp_run(const RunConfig& cfg);

// Reads a finished (or partial) run directory back.
PruneRun load_run(const std::string& dir);

// Picks a teacher checkpoint path from a run: kDense takes round 0;
// kBestFitPruned takes the round with the best validation accuracy,
// lowest sparsity on ties. Returns an absolute-or-run-relative resolved
// path. kNone raises InputError.
std::string select_teacher(const PruneRun& run, TeacherKind kind);

}  // namespace sdd
