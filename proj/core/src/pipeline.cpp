#include "sdd/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <utility>

#include "sdd/analyze.hpp"
#include "sdd/checkpoint.hpp"
#include "sdd/error.hpp"
#include "sdd/rng.hpp"
#include "sdd/runio.hpp"

namespace fs = std::filesystem;

namespace sdd {

DataBundle assemble_data(const RunConfig& cfg) {
  LabeledDataset pool, test;
  if (cfg.dataset == DatasetKind::kIdx) {
    pool = load_idx_dataset(cfg.idx.train_images, cfg.idx.train_labels);
    test = load_idx_dataset(cfg.idx.test_images, cfg.idx.test_labels);
    if (pool.class_count != test.class_count) {
      int c = std::max(pool.class_count, test.class_count);
      pool.class_count = test.class_count = c;
    }
  } else {
    LabeledDataset blobs =
        synth_blobs(cfg.blobs.classes, cfg.blobs.per_class, cfg.blobs.dim,
                    cfg.blobs.spread, derive_seed(cfg.seed, "blobs"));
    auto carved = split(blobs, 1.0 - cfg.blobs.test_fraction,
                        derive_seed(cfg.seed, "blobs-test"));
    pool = std::move(carved.first);
    test = std::move(carved.second);
  }
  if (cfg.subset > 0) pool = take_prefix(pool, cfg.subset);

  auto parts = split(pool, cfg.train_fraction, derive_seed(cfg.seed, "split"));
  DataBundle data;
  data.val = std::move(parts.second);
  data.train = inject_symmetric_noise(
      parts.first, {cfg.noise_epsilon, derive_seed(cfg.seed, "noise")});
  data.test = std::move(test);
  data.train.validate();
  data.val.validate();
  data.test.validate();
  return data;
}

namespace {

// Returns records for every complete round already on disk (CSV row and
// checkpoint both present, hash matching), or an empty vector for a fresh
// directory. Raises InputError if the directory belongs to another config.
std::vector<RoundRecord> existing_rounds(const RunConfig& cfg, uint64_t hash) {
  fs::path dir(cfg.out_dir);
  fs::path meta = dir / "config.resolved.cfg";
  if (!fs::exists(meta)) return {};
  ResolvedConfig rc = read_resolved_config(cfg.out_dir);
  if (rc.hash != hash)
    throw InputError("output directory " + cfg.out_dir +
                     " holds a different configuration (hash mismatch)");
  fs::path csv = dir / "rounds.csv";
  if (!fs::exists(csv)) return {};
  std::vector<RoundRecord> rows = read_rounds_csv(csv.string());
  std::vector<RoundRecord> complete;
  for (const auto& r : rows) {
    if (r.round != static_cast<int>(complete.size())) break;  // gap: stop
    if (!fs::exists(dir / r.checkpoint_path)) break;
    complete.push_back(r);
  }
  return complete;
}

bool run_finished(const RunConfig& cfg, const std::vector<RoundRecord>& rounds) {
  if (rounds.empty()) return false;
  if (rounds.back().sparsity >= cfg.schedule.zeta_end) return true;
  if (cfg.max_rounds > 0 && rounds.back().round >= cfg.max_rounds) return true;
  return false;
}

}  // namespace

PruneRun imp_run(const RunConfig& cfg) {
  cfg.validate_for_run();
  // Run identity excludes the output location: the same experiment is
  // resumable no matter how its directory is addressed, and the stored
  // artifacts stay byte-identical across locations.
  RunConfig stored = cfg;
  stored.out_dir.clear();
  uint64_t hash = config_hash(stored);

  fs::create_directories(cfg.out_dir);
  PruneRun run;
  run.config = cfg;
  run.config_hash = hash;
  run.dir = cfg.out_dir;
  run.rounds = existing_rounds(cfg, hash);
  write_resolved_config(stored, cfg.out_dir);
  if (run_finished(cfg, run.rounds)) return run;
  // Keep only complete rounds in the CSV before continuing.
  write_rounds_csv(cfg.out_dir + "/rounds.csv", run.rounds);

  DataBundle data = assemble_data(cfg);
  MlpModel teacher;
  KdConfig kd = cfg.kd;
  if (kd.alpha > 0.0) {
    std::string path = kd.teacher_checkpoint;
    if (path.empty()) {
      PruneRun teacher_run = load_run(cfg.kd_teacher_run);
      path = select_teacher(teacher_run, cfg.kd.teacher_kind);
    }
    teacher = load_checkpoint(path).model;
    kd.teacher_checkpoint = path;
    if (teacher.input_dim != data.train.feature_dim() ||
        teacher.class_count != data.train.class_count)
      throw InputError("teacher checkpoint does not match the dataset dims");
  }

  MlpModel model;
  int start_round = static_cast<int>(run.rounds.size());
  if (start_round == 0) {
    model = build_mlp(data.train.feature_dim(), cfg.hidden,
                      data.train.class_count, derive_seed(cfg.seed, "init"));
  } else {
    model = load_checkpoint(cfg.out_dir + "/" +
                            run.rounds.back().checkpoint_path)
                .model;
  }

  for (int round = start_round;; ++round) {
    if (round > 0) {
      int64_t removed =
          magnitude_prune(model, cfg.schedule.zeta_iter, cfg.prune_scope);
      if (removed == 0)
        throw StateError(
            "pruning made no progress at round " + std::to_string(round) +
            "; zeta_iter too small for the surviving weight count");
    }
    try {
      // Per-epoch val/test traces are skipped: only the post-round
      // evaluations below feed rounds.csv, and the in-loop evals would
      // dominate the round cost at MNIST scale.
      train(model, data.train, nullptr, nullptr, cfg.opt, kd,
            kd.alpha > 0.0 ? &teacher : nullptr,
            derive_seed(cfg.seed, "round", static_cast<uint64_t>(round)));
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(round) + ": " + e.what());
    }

    RoundRecord rec;
    rec.round = round;
    rec.sparsity = sparsity(model);
    rec.train_acc = evaluate(model, data.train, LabelSource::kNoisy);
    rec.val_acc = evaluate(model, data.val, LabelSource::kClean);
    EvalResult test_eval = evaluate_metrics(model, data.test, LabelSource::kClean);
    rec.test_acc = test_eval.accuracy;
    rec.test_loss = test_eval.ce_loss;
    rec.epochs = cfg.opt.epochs;
    rec.flops = training_flops(model, data.train.size(), cfg.opt.epochs);
    rec.checkpoint_path = round_checkpoint_name(round);
    save_checkpoint(model, hash, cfg.out_dir + "/" + rec.checkpoint_path);
    run.rounds.push_back(rec);
    write_rounds_csv(cfg.out_dir + "/rounds.csv", run.rounds);

    if (run_finished(cfg, run.rounds)) break;
  }
  return run;
}

PruneRun load_run(const std::string& dir) {
  ResolvedConfig rc = read_resolved_config(dir);
  PruneRun run;
  run.config = rc.config;
  run.config.out_dir = dir;  // identity omits the location; restore it
  run.config_hash = rc.hash;
  run.dir = dir;
  run.rounds = read_rounds_csv(dir + "/rounds.csv");
  return run;
}

std::string select_teacher(const PruneRun& run, TeacherKind kind) {
  if (run.rounds.empty())
    throw InputError("select_teacher: run has no rounds");
  const RoundRecord* pick = nullptr;
  switch (kind) {
    case TeacherKind::kNone:
      throw InputError("select_teacher: teacher kind is none");
    case TeacherKind::kDense:
      pick = &run.rounds.front();
      if (pick->round != 0 || pick->sparsity != 0.0)
        throw InputError("select_teacher: run has no dense round");
      break;
    case TeacherKind::kBestFitPruned: {
      for (const auto& r : run.rounds)
        if (pick == nullptr || r.val_acc > pick->val_acc) pick = &r;
      // Ties keep the earliest (lowest-sparsity) round by scan order.
      break;
    }
  }
  return run.dir + "/" + pick->checkpoint_path;
}

}  // namespace sdd
