// Iterative magnitude pruning primitives: sparsity accounting, one-shot
// magnitude pruning of the smallest surviving weights, and the per-round
// record emitted by the pruning pipeline.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdd/mlp.hpp"

namespace sdd {

struct PruneSchedule {
  double zeta_iter = 0.2;  // fraction of survivors removed per round
  double zeta_end = 0.998; // stop once sparsity reaches this level
  void validate() const;
};

enum class PruneScope : uint8_t { kGlobal = 0, kPerLayer = 1 };

// Fraction of weight entries currently masked (biases excluded).
double sparsity(const MlpModel& model);

// Masks the floor(zeta_iter * surviving) smallest-magnitude surviving
// weights and zeroes them. Ranking is by (|weight|, flat index) so ties
// resolve by the documented flatten ordering. kGlobal ranks across all
// layers; kPerLayer applies the fraction within each layer independently.
// Returns the number of newly masked entries (0 when the floor vanishes).
// Errors if no weights survive.
int64_t magnitude_prune(MlpModel& model, double zeta_iter,
                        PruneScope scope = PruneScope::kGlobal);

// One row of the sparsity trajectory written to rounds.csv.
struct RoundRecord {
  int round = 0;
  double sparsity = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double test_loss = 0.0;
  int epochs = 0;
  int64_t flops = 0;  // training FLOPs spent in this round
  std::string checkpoint_path;
};

}  // namespace sdd
