// Run configuration: a flat, typed key = value text format with a
// canonical serialization whose FNV-1a hash stamps every derived artifact.
//
// Schema (defaults in parentheses):
//   dataset               idx | blobs            (blobs)
//   idx.train_images      path, ".gz" inflated   ()
//   idx.train_labels      path                   ()
//   idx.test_images       path                   ()
//   idx.test_labels       path                   ()
//   subset                int, first-n prefix of the train pool, 0 = all (0)
//   split.train_fraction  double in (0,1)        (0.9)
//   blobs.classes         int                    (10)
//   blobs.per_class       int                    (200)
//   blobs.dim             int                    (16)
//   blobs.spread          double >= 0            (0.15)
//   blobs.test_fraction   double in (0,1)        (0.2)
//   noise.epsilon         double in [0,1]        (0)
//   model.hidden          comma ints             (300,100)
//   opt.lr                double > 0             (0.1)
//   opt.momentum          double in [0,1)        (0.9)
//   opt.milestones        comma ints, sorted     (80,120)
//   opt.decay             double in (0,1]        (0.1)
//   opt.lambda            double >= 0            (0)
//   opt.epochs            int >= 0               (160)
//   opt.batch             int > 0                (128)
//   prune.zeta_iter       double in (0,1)        (0.2)
//   prune.zeta_end        double in (0,1)        (0.998)
//   prune.scope           global | per_layer     (global)
//   prune.max_rounds      int >= 0, pruning rounds cap, 0 = none (0)
//   kd.alpha              double in [0,1]        (0)
//   kd.tau                double > 0             (4)
//   kd.teacher            checkpoint path        ()
//   kd.teacher_run        run directory          ()
//   kd.teacher_kind       none | dense | best_fit_pruned (none)
//   seed                  uint64                 (1)
//   out                   output directory       ()
//
// Lines starting with '#' and blank lines are ignored. Unknown keys and
// ill-typed values raise ConfigError.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdd/prune.hpp"
#include "sdd/train.hpp"

namespace sdd {

enum class DatasetKind : uint8_t { kBlobs = 0, kIdx = 1 };

struct IdxPaths {
  std::string train_images, train_labels, test_images, test_labels;
};

struct BlobSpec {
  int classes = 10;
  int per_class = 200;
  int dim = 16;
  double spread = 0.15;
  double test_fraction = 0.2;
};

struct RunConfig {
  DatasetKind dataset = DatasetKind::kBlobs;
  IdxPaths idx;
  int64_t subset = 0;
  double train_fraction = 0.9;
  BlobSpec blobs;
  double noise_epsilon = 0.0;
  std::vector<int> hidden = {300, 100};
  OptimizerPolicy opt;
  PruneSchedule schedule;
  PruneScope prune_scope = PruneScope::kGlobal;
  int max_rounds = 0;
  KdConfig kd;
  std::string kd_teacher_run;  // run dir to resolve the teacher from
  uint64_t seed = 1;
  std::string out_dir;

  // Field-level validation (ranges, list ordering). Cross-field checks
  // that only matter for a full run live in validate_for_run().
  void validate() const;
  void validate_for_run() const;
};

// Sets one schema key on the config; used by the parser and by CLI
// overrides so there is a single source of truth for key handling.
void config_set(RunConfig& cfg, const std::string& key,
                const std::string& value);

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Canonical serialization: fixed key order, %.17g numbers. Two configs
// are equivalent iff their canonical forms are byte-identical.
std::string canonical_config(const RunConfig& cfg);
uint64_t config_hash(const RunConfig& cfg);

// Canonical form with seed and out dir neutralized; groups a sweep's
// seed replicates together.
std::string config_group_key(const RunConfig& cfg);

}  // namespace sdd
