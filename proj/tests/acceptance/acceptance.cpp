// Acceptance suite: prints one [PASS]/[FAIL]/[SKIP] line per criterion
// and exits nonzero if any criterion fails.
//
// Fast criteria (1-5, 9) always run. Criteria 6-8 train the MNIST
// pruning pipeline (hours of CPU) and only run with --slow; their run
// directories live under --work and are reused verbatim on re-runs.
#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "sdd/analyze.hpp"
#include "sdd/blas.hpp"
#include "sdd/checkpoint.hpp"
#include "sdd/dataset.hpp"
#include "sdd/error.hpp"
#include "sdd/mlp.hpp"
#include "sdd/pipeline.hpp"
#include "sdd/prune.hpp"
#include "sdd/rng.hpp"
#include "sdd/runio.hpp"
#include "sdd/svgplot.hpp"
#include "sdd/sweep.hpp"
#include "sdd/tensor.hpp"
#include "sdd/train.hpp"

namespace fs = std::filesystem;
using namespace sdd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

std::string fmtg(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------- 1
double ce_loss_of(MlpModel& model, const Tensor& batch,
                  const std::vector<int>& targets) {
  Tape t;
  Value logits = forward(model, t, t.constant(batch));
  return t.softmax_cross_entropy(logits, targets).scalar();
}

Outcome criterion_gradients() {
  constexpr double h = 1e-5;
  double max_rel = 0.0;
  int64_t checked = 0, kinks = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(42, "accept-grad", static_cast<uint64_t>(trial)));
    int n_hidden = static_cast<int>(rng.below(3));  // total layers <= 3
    std::vector<int> hidden;
    for (int i = 0; i < n_hidden; ++i)
      hidden.push_back(2 + static_cast<int>(rng.below(15)));
    int input_dim = 2 + static_cast<int>(rng.below(15));
    int classes = 2 + static_cast<int>(rng.below(15));
    MlpModel model = build_mlp(input_dim, hidden, classes,
                               derive_seed(43, "init", trial));
    FlatPrunable flat(model);
    for (int64_t i = 0; i < flat.size(); ++i)
      if (rng.next_unit() < 0.25) {
        flat.mask(i) = 0.0;
        flat.weight(i) = 0.0;
      }
    // Zero-initialized biases put dead units exactly on the ReLU kink,
    // where central differences and the subgradient legitimately differ;
    // random biases keep the probe at differentiable points.
    for (auto& layer : model.layers)
      for (double& v : layer.bias.data) v = rng.uniform(-0.5, 0.5);

    int batch = 1 + static_cast<int>(rng.below(4));
    Tensor x = Tensor::zeros({batch, input_dim});
    for (double& v : x.data) v = rng.next_unit();
    std::vector<int> targets;
    for (int b = 0; b < batch; ++b)
      targets.push_back(static_cast<int>(rng.below(classes)));

    model.zero_grad();
    {
      Tape t;
      Value logits = forward(model, t, t.constant(x));
      t.backward(t.softmax_cross_entropy(logits, targets));
    }
    double f0 = ce_loss_of(model, x, targets);

    // Second-difference smoothness filter: a ReLU kink inside the probed
    // segment shows up as |f(+h)+f(-h)-2f(0)| >> h^2, and central
    // differences are meaningless there.
    auto probe = [&](double& param, double analytic) {
      double saved = param;
      param = saved + h;
      double fp = ce_loss_of(model, x, targets);
      param = saved - h;
      double fm = ce_loss_of(model, x, targets);
      param = saved;
      if (std::fabs(fp + fm - 2 * f0) > 1e-7) {
        ++kinks;
        return;
      }
      double fd = (fp - fm) / (2 * h);
      double rel = std::fabs(analytic - fd) / std::max(1e-2, std::fabs(fd));
      max_rel = std::max(max_rel, rel);
      ++checked;
    };
    for (auto& layer : model.layers) {
      for (size_t i = 0; i < layer.weight.data.size(); ++i) {
        if (layer.mask.data[i] == 0.0) continue;
        probe(layer.weight.data[i], layer.weight.grad[i]);
      }
      for (size_t i = 0; i < layer.bias.data.size(); ++i)
        probe(layer.bias.data[i], layer.bias.grad[i]);
    }
  }
  return {max_rel < 1e-6 && checked > 10000,
          "100 random models, " + std::to_string(checked) +
              " parameters, max rel err " + fmtg(max_rel) + ", " +
              std::to_string(kinks) + " kink probes skipped"};
}

// ---------------------------------------------------------------- 2
Outcome criterion_prune_algebra() {
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(derive_seed(42, "accept-prune", static_cast<uint64_t>(trial)));
    int input_dim = 5 + static_cast<int>(rng.below(30));
    std::vector<int> hidden{4 + static_cast<int>(rng.below(28))};
    int classes = 2 + static_cast<int>(rng.below(8));
    MlpModel model =
        build_mlp(input_dim, hidden, classes, derive_seed(77, "w", trial));
    double total = static_cast<double>(model.weight_count());

    for (int round = 1; round <= 8; ++round) {
      FlatPrunable flat(model);
      std::vector<std::pair<double, int64_t>> cand;
      std::vector<double> old_mask(static_cast<size_t>(flat.size()));
      for (int64_t i = 0; i < flat.size(); ++i) {
        old_mask[static_cast<size_t>(i)] = flat.mask(i);
        if (flat.mask(i) != 0.0) cand.push_back({std::fabs(flat.weight(i)), i});
      }
      std::sort(cand.begin(), cand.end());
      int64_t expect =
          static_cast<int64_t>(0.2 * static_cast<double>(cand.size()));

      int64_t removed = magnitude_prune(model, 0.2, PruneScope::kGlobal);
      if (removed != expect)
        return {false, "removed " + std::to_string(removed) + ", brute force " +
                           std::to_string(expect)};
      for (int64_t i = 0; i < expect; ++i) {
        int64_t idx = cand[static_cast<size_t>(i)].second;
        if (flat.mask(idx) != 0.0 || flat.weight(idx) != 0.0)
          return {false, "smallest-magnitude entry survived a prune round"};
      }
      for (int64_t i = expect; i < static_cast<int64_t>(cand.size()); ++i)
        if (flat.mask(cand[static_cast<size_t>(i)].second) == 0.0)
          return {false, "pruned an entry outside the brute-force set"};
      for (int64_t i = 0; i < flat.size(); ++i)
        if (flat.mask(i) > old_mask[static_cast<size_t>(i)])
          return {false, "mask resurrected a pruned entry"};
      double want = 1.0 - std::pow(0.8, round);
      if (std::fabs(sparsity(model) - want) > round / total + 1e-12)
        return {false, "sparsity after round " + std::to_string(round) +
                           " drifted beyond floor rounding"};
    }
  }
  return {true, "10 random models x 8 rounds, brute-force sort agrees"};
}

// ---------------------------------------------------------------- 3
LabeledDataset label_fixture(int64_t n, int classes, uint64_t seed) {
  LabeledDataset ds;
  ds.inputs = Tensor::zeros({static_cast<int>(n), 1});
  Rng rng(seed);
  for (int64_t i = 0; i < n; ++i)
    ds.labels.push_back(static_cast<int>(rng.below(classes)));
  ds.clean_labels = ds.labels;
  ds.class_count = classes;
  ds.validate();
  return ds;
}

Outcome criterion_noise() {
  LabeledDataset base = label_fixture(10000, 10, derive_seed(1, "labels"));
  std::string detail;
  for (double eps : {0.1, 0.2, 0.5}) {
    LabeledDataset noisy = inject_symmetric_noise(
        base, {eps, derive_seed(5, "noise", static_cast<uint64_t>(eps * 10))});
    int64_t flips = 0;
    for (size_t i = 0; i < noisy.labels.size(); ++i) {
      if (noisy.labels[i] != noisy.clean_labels[i]) ++flips;
      if (noisy.clean_labels[i] != base.labels[i])
        return {false, "clean labels were not preserved"};
    }
    int64_t want = std::llround(eps * 10000);
    if (flips != want)
      return {false, "eps=" + fmtg(eps) + ": " + std::to_string(flips) +
                         " flips, expected exactly " + std::to_string(want)};
    FlipStats stats = audit_noise(noisy);
    if (stats.p_value < 0.01)
      return {false, "eps=" + fmtg(eps) +
                         ": flip-target uniformity rejected, p = " +
                         fmtg(stats.p_value)};
    detail += (detail.empty() ? "p=" : ",") + fmtg(stats.p_value);
  }
  LabeledDataset zero = inject_symmetric_noise(base, {0.0, 9});
  if (zero.labels != base.labels) return {false, "eps=0 altered labels"};
  LabeledDataset two = label_fixture(10000, 2, derive_seed(2, "labels"));
  LabeledDataset all = inject_symmetric_noise(two, {1.0, 11});
  for (size_t i = 0; i < all.labels.size(); ++i)
    if (all.labels[i] != 1 - all.clean_labels[i])
      return {false, "eps=1 on 2 classes must flip every label"};
  return {true, "exact flip counts; uniformity " + detail + "; edge cases ok"};
}

// ---------------------------------------------------------------- 4
Outcome criterion_loss_identities() {
  Rng rng(derive_seed(4, "losses"));
  // alpha = 0 collapses to the CE node itself.
  Tensor logits = Tensor::zeros({4, 5});
  for (double& v : logits.data) v = rng.uniform(-2.0, 2.0);
  std::vector<int> targets = {0, 3, 2, 4};
  Tape a;
  double ce = a.softmax_cross_entropy(a.constant(logits), targets).scalar();
  Tape b;
  Value node = b.constant(logits);
  size_t before = b.node_count();
  KdConfig off;
  double combined = total_loss(b, node, targets, nullptr, off).scalar();
  if (std::memcmp(&combined, &ce, sizeof combined) != 0)
    return {false, "alpha=0 objective is not bitwise CE"};
  if (b.node_count() != before + 1)
    return {false, "alpha=0 objective added extra tape nodes"};

  double min_kl = 1e300;
  for (int i = 0; i < 50; ++i) {
    Tensor s = Tensor::zeros({3, 6}), t = Tensor::zeros({3, 6});
    for (double& v : s.data) v = rng.uniform(-3.0, 3.0);
    for (double& v : t.data) v = rng.uniform(-3.0, 3.0);
    double tau = (i % 3 == 0) ? 1.0 : (i % 3 == 1 ? 2.5 : 4.0);
    Tape k;
    double kl =
        k.kl_divergence_loss(k.constant(s), k.constant(t), tau).scalar();
    min_kl = std::min(min_kl, kl);
  }
  if (min_kl < -1e-15)
    return {false, "KL went negative: " + fmtg(min_kl)};

  Tensor s = Tensor::zeros({2, 4});
  for (double& v : s.data) v = rng.uniform(-1.0, 1.0);
  Tensor shifted = s;
  for (double& v : shifted.data) v += 3.7;  // same softmax
  Tape k1;
  double same =
      k1.kl_divergence_loss(k1.constant(s), k1.constant(s), 4.0).scalar();
  Tape k2;
  double shift =
      k2.kl_divergence_loss(k2.constant(shifted), k2.constant(s), 4.0)
          .scalar();
  Tensor other = s;
  other.data[3] += 0.5;
  Tape k3;
  double diff =
      k3.kl_divergence_loss(k3.constant(other), k3.constant(s), 1.0).scalar();
  if (std::fabs(same) > 1e-12 || std::fabs(shift) > 1e-12)
    return {false, "KL(equal distributions) is not zero"};
  if (diff <= 1e-6)
    return {false, "KL(different distributions) is not positive"};

  for (int classes : {2, 7, 10}) {
    for (double fill : {0.0, 2.5}) {
      Tape t;
      std::vector<int> tg(3, classes - 1);
      double v = t.softmax_cross_entropy(
                      t.constant(Tensor::full({3, classes}, fill)), tg)
                     .scalar();
      if (std::fabs(v - std::log(classes)) > 1e-12)
        return {false, "uniform-logits CE is not ln(C)"};
    }
  }
  return {true, "alpha=0 bitwise CE; KL >= 0, zero iff equal; CE(ln C) ok"};
}

// ---------------------------------------------------------------- 5
RunConfig blob_cfg(uint64_t seed, double lambda, const std::string& out) {
  RunConfig cfg;
  cfg.dataset = DatasetKind::kBlobs;
  cfg.blobs = {5, 80, 10, 0.25, 0.2};
  cfg.noise_epsilon = 0.3;
  cfg.hidden = {32, 16};
  cfg.opt.milestones = {8};
  cfg.opt.lambda_l2 = lambda;
  cfg.opt.epochs = 12;
  cfg.opt.batch_size = 32;
  cfg.schedule.zeta_end = 0.9;
  cfg.seed = seed;
  cfg.out_dir = out;
  return cfg;
}

Outcome criterion_determinism(const std::string& work) {
  std::string base = work + "/criterion5";
  imp_run(blob_cfg(3, 0.0, base + "/a"));
  imp_run(blob_cfg(3, 0.0, base + "/b"));
  if (read_bytes(base + "/a/rounds.csv") != read_bytes(base + "/b/rounds.csv"))
    return {false, "re-running one config changed rounds.csv bytes"};

  auto grid = [&](const std::string& tag) {
    std::vector<RunConfig> configs;
    int i = 0;
    for (double lam : {0.0, 1e-3})
      for (uint64_t seed : {1, 2})
        configs.push_back(
            blob_cfg(seed, lam, base + "/" + tag + "/" + std::to_string(i++)));
    return configs;
  };
  std::vector<RunOutcome> seq = run_sweep(grid("p1"), 1);
  std::vector<RunOutcome> par = run_sweep(grid("p4"), 4);
  for (const RunOutcome& o : seq)
    if (!o.ok) return {false, "sweep run failed: " + o.error};
  for (const RunOutcome& o : par)
    if (!o.ok) return {false, "parallel sweep run failed: " + o.error};
  for (int i = 0; i < 4; ++i) {
    std::string sp = base + "/p1/" + std::to_string(i) + "/rounds.csv";
    std::string pp = base + "/p4/" + std::to_string(i) + "/rounds.csv";
    if (read_bytes(sp) != read_bytes(pp))
      return {false, "parallelism 1 vs 4 changed rounds.csv bytes"};
  }
  return {true, "repeat run and parallel sweep byte-identical"};
}

// ---------------------------------------------------------------- 9
Outcome criterion_flops(const std::string& work) {
  MlpModel model = build_mlp(784, {300, 100}, 10, 1);
  if (forward_flops(model) != 532400)
    return {false, "dense forward FLOPs not 532400"};
  for (auto& layer : model.layers) {
    int64_t half = layer.weight.size() / 2;
    for (int64_t i = 0; i < half; ++i) layer.mask.data[static_cast<size_t>(i)] = 0.0;
  }
  model.apply_masks();
  if (forward_flops(model) != 266200)
    return {false, "50% uniform sparsity did not halve forward FLOPs"};

  PruneRun run = load_run(work + "/criterion5/a");
  int64_t sum = 0;
  for (const RoundRecord& r : run.rounds) sum += r.flops;
  RunOutcome o;
  o.config = run.config;
  o.ok = true;
  o.rounds = run.rounds;
  SummaryOptions opts;
  std::vector<SummaryRow> rows = summarize({o}, opts);
  if (rows.size() != 1 ||
      rows[0].flops_mean != static_cast<double>(sum))
    return {false, "summary FLOPs total disagrees with per-round sum"};
  SparsityCurve curve = curve_from_records(run.rounds);
  if (curve.points.back().cumulative_flops != sum)
    return {false, "curve cumulative FLOPs disagrees with per-round sum"};
  return {true, "532400 dense, halves at 50%, summary total = round sum"};
}

// ------------------------------------------------------------ 6/7/8
struct SlowRuns {
  std::vector<double> lambdas{0.0, 1e-4, 1e-3, 1e-2};
  std::vector<uint64_t> seeds{1, 2, 3};
  // runs[lambda_index][seed_index]
  std::vector<std::vector<PruneRun>> runs;
  std::vector<PruneRun> kd_runs;  // per seed
  int lambda_opt_index = -1;      // into lambdas, > 0
};

RunConfig mnist_cfg(const std::string& data_dir, uint64_t seed, double lambda,
                    const std::string& out) {
  RunConfig cfg;
  cfg.dataset = DatasetKind::kIdx;
  cfg.idx.train_images = data_dir + "/train-images-idx3-ubyte.gz";
  cfg.idx.train_labels = data_dir + "/train-labels-idx1-ubyte.gz";
  cfg.idx.test_images = data_dir + "/t10k-images-idx3-ubyte.gz";
  cfg.idx.test_labels = data_dir + "/t10k-labels-idx1-ubyte.gz";
  cfg.subset = 10000;
  cfg.noise_epsilon = 0.5;
  cfg.opt.epochs = 40;
  cfg.opt.lambda_l2 = lambda;
  cfg.max_rounds = 28;
  cfg.seed = seed;
  cfg.out_dir = out;
  return cfg;
}

std::string lam_tag(double lam) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", lam);
  std::string s = buf;
  for (char& c : s)
    if (c == '.' || c == '-' || c == '+') c = '_';
  return s;
}

PruneRun run_logged(const RunConfig& cfg, int i, int total) {
  auto t0 = std::chrono::steady_clock::now();
  std::fprintf(stderr, "[slow] run %d/%d %s ...\n", i, total,
               cfg.out_dir.c_str());
  PruneRun run = imp_run(cfg);
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  std::fprintf(stderr, "[slow] run %d/%d done in %.0fs (%zu rounds)\n", i,
               total, secs, run.rounds.size());
  return run;
}

std::vector<double> accs_of(const PruneRun& run) {
  std::vector<double> a;
  for (const RoundRecord& r : run.rounds) a.push_back(r.test_acc);
  return a;
}

SlowRuns execute_slow_runs(const std::string& data_dir,
                           const std::string& work) {
  SlowRuns slow;
  int total = static_cast<int>(slow.lambdas.size() * slow.seeds.size() +
                               slow.seeds.size());
  int i = 0;
  for (double lam : slow.lambdas) {
    slow.runs.emplace_back();
    for (uint64_t seed : slow.seeds) {
      std::string out = work + "/slow/lam" + lam_tag(lam) + "-s" +
                        std::to_string(seed);
      slow.runs.back().push_back(
          run_logged(mnist_cfg(data_dir, seed, lam, out), ++i, total));
    }
  }

  // lambda_opt: the smallest swept lambda whose curve loses the
  // double-descent shape on at least 2 of 3 seeds; falls back to the best
  // scorer so the distillation runs can still proceed when none qualifies.
  int best = 1, best_count = -1;
  for (size_t li = 1; li < slow.lambdas.size(); ++li) {
    int count = 0;
    for (const PruneRun& run : slow.runs[li]) {
      SddVerdict v = detect_sdd(curve_from_records(run.rounds), 0.01);
      if (!v.is_sdd) ++count;
    }
    if (count >= 2) {
      slow.lambda_opt_index = static_cast<int>(li);
      break;
    }
    if (count > best_count) {
      best_count = count;
      best = static_cast<int>(li);
    }
  }
  int li = slow.lambda_opt_index >= 0 ? slow.lambda_opt_index : best;

  for (size_t si = 0; si < slow.seeds.size(); ++si) {
    RunConfig cfg = mnist_cfg(
        data_dir, slow.seeds[si], 0.0,
        work + "/slow/kd-s" + std::to_string(slow.seeds[si]));
    cfg.kd.alpha = 0.9;
    cfg.kd.tau = 4.0;
    cfg.kd.teacher_kind = TeacherKind::kBestFitPruned;
    cfg.kd_teacher_run = slow.runs[static_cast<size_t>(li)][si].dir;
    slow.kd_runs.push_back(run_logged(cfg, ++i, total));
  }
  return slow;
}

Outcome criterion_sdd(const SlowRuns& slow) {
  std::string detail;
  int sdd_count = 0;
  for (size_t si = 0; si < slow.seeds.size(); ++si) {
    SddVerdict v =
        detect_sdd(curve_from_records(slow.runs[0][si].rounds), 0.01);
    bool strong =
        v.is_sdd && v.dip_depth >= 0.02 && v.recovery_height >= 0.02;
    if (strong) ++sdd_count;
    detail += "s" + std::to_string(slow.seeds[si]) + ":" +
              (strong ? "sdd" : curve_class_name(v.classification)) +
              "(d=" + fmtg(v.dip_depth) + ",r=" + fmtg(v.recovery_height) +
              ") ";
  }
  bool pass_a = sdd_count >= 2;

  detail += "| l2:";
  bool pass_b = slow.lambda_opt_index > 0;
  for (size_t li = 1; li < slow.lambdas.size(); ++li) {
    int gone = 0;
    std::string classes;
    for (const PruneRun& run : slow.runs[li]) {
      SddVerdict v = detect_sdd(curve_from_records(run.rounds), 0.01);
      if (!v.is_sdd) ++gone;
      classes += classes.empty() ? "" : ",";
      classes += curve_class_name(v.classification);
    }
    detail += " " + fmtg(slow.lambdas[li]) + "->" + std::to_string(gone) +
              "/3 non-sdd[" + classes + "]";
  }
  return {pass_a && pass_b,
          std::to_string(sdd_count) + "/3 seeds SDD at lambda=0; " + detail};
}

Outcome criterion_early_stop(const SlowRuns& slow) {
  int li = slow.lambda_opt_index > 0 ? slow.lambda_opt_index : 1;
  int pass_vanilla = 0, pass_opt = 0;
  std::string detail;
  for (size_t si = 0; si < slow.seeds.size(); ++si) {
    const PruneRun& van = slow.runs[0][si];
    std::vector<double> acc = accs_of(van);
    int stop = early_stop_index(acc, 2, 0.02);
    SddVerdict v = detect_sdd(curve_from_records(van.rounds), 0.01);
    bool ok = stop >= 0 && v.is_sdd && v.recovery_index >= 0 &&
              van.rounds[static_cast<size_t>(stop)].sparsity <
                  van.rounds[static_cast<size_t>(v.recovery_index)].sparsity;
    if (ok) ++pass_vanilla;
    detail += "s" + std::to_string(slow.seeds[si]) + ":stop@" +
              std::to_string(stop) + (ok ? "<recovery " : "!<recovery ");
  }
  detail += "| opt:";
  for (size_t si = 0; si < slow.seeds.size(); ++si) {
    const PruneRun& opt = slow.runs[static_cast<size_t>(li)][si];
    std::vector<double> acc = accs_of(opt);
    int stop = early_stop_index(acc, 2, 0.02);
    double best = *std::max_element(acc.begin(), acc.end());
    int64_t cum = 0, at_stop = 0, total = 0;
    for (size_t k = 0; k < opt.rounds.size(); ++k) {
      cum += opt.rounds[k].flops;
      if (stop >= 0 && k == static_cast<size_t>(stop)) at_stop = cum;
      total = cum;
    }
    double saving =
        stop >= 0 ? 1.0 - static_cast<double>(at_stop) /
                              static_cast<double>(total)
                  : 0.0;
    // Early stopping keeps the best checkpoint seen so far; the stop
    // round itself is by definition > tol below the running best, so the
    // retained accuracy is what gets compared against the curve's best.
    double kept =
        stop >= 0 ? *std::max_element(acc.begin(),
                                      acc.begin() + stop + 1)
                  : 0.0;
    bool within = stop >= 0 && kept >= best - 0.02;
    bool ok = within && saving >= 0.20;
    if (ok) ++pass_opt;
    detail += " s" + std::to_string(slow.seeds[si]) + ":stop@" +
              std::to_string(stop) + ",kept=" + fmtg(kept) +
              (within ? "(ok)" : "(low)") +
              ",save=" + fmtg(saving * 100) + "%";
  }
  return {pass_vanilla >= 2 && pass_opt >= 2,
          std::to_string(pass_vanilla) + "/3 premature at lambda=0, " +
              std::to_string(pass_opt) + "/3 efficient at lambda_opt; " +
              detail};
}

Outcome criterion_kd(const SlowRuns& slow, const std::string& work) {
  int non_sdd = 0, margin_ok = 0, margins = 0;
  std::string detail;
  for (size_t si = 0; si < slow.seeds.size(); ++si) {
    const PruneRun& kd = slow.kd_runs[si];
    const PruneRun& van = slow.runs[0][si];
    SddVerdict kv = detect_sdd(curve_from_records(kd.rounds), 0.01);
    if (!kv.is_sdd) ++non_sdd;
    detail += "s" + std::to_string(slow.seeds[si]) + ":" +
              curve_class_name(kv.classification);

    SddVerdict vv = detect_sdd(curve_from_records(van.rounds), 0.01);
    if (vv.is_sdd && vv.recovery_index > vv.peak_index) {
      size_t lo = static_cast<size_t>(vv.peak_index + 1);
      size_t hi = std::min(static_cast<size_t>(vv.recovery_index),
                           kd.rounds.size() - 1);
      double kd_min = 1.0, van_min = 1.0;
      for (size_t k = lo; k <= hi; ++k) {
        kd_min = std::min(kd_min, kd.rounds[k].test_acc);
        van_min = std::min(van_min, van.rounds[k].test_acc);
      }
      ++margins;
      double margin = kd_min - van_min;
      if (margin >= 0.02) ++margin_ok;
      detail += ",margin=" + fmtg(margin * 100) + "pt";
    }
    detail += " ";
  }

  // Comparative plot for manual review (always emitted).
  std::vector<SparsityCurve> curves;
  std::vector<std::string> labels;
  for (size_t si = 0; si < slow.seeds.size(); ++si) {
    curves.push_back(curve_from_records(slow.runs[0][si].rounds));
    labels.push_back("plain seed " + std::to_string(slow.seeds[si]));
    curves.push_back(curve_from_records(slow.kd_runs[si].rounds));
    labels.push_back("distilled seed " + std::to_string(slow.seeds[si]));
  }
  PlotOptions popts;
  popts.title = "distilled vs plain students, 50% label noise";
  std::string plot_path = work + "/slow/kd-vs-plain.svg";
  write_svg(plot_path, render_curves_svg(curves, labels, popts));

  bool margin_pass = margins > 0 && margin_ok >= 2;
  std::string note = margin_pass
                         ? "margin >= 2pt on " + std::to_string(margin_ok) +
                               "/" + std::to_string(margins)
                         : "margin fallback (reported only): " +
                               std::to_string(margin_ok) + "/" +
                               std::to_string(margins) + " >= 2pt";
  return {non_sdd >= 2, std::to_string(non_sdd) +
                            "/3 distilled students non-SDD; " + note +
                            "; " + detail + "plot: " + plot_path};
}

}  // namespace

int main(int argc, char** argv) {
  init_blas_runtime(argv);

  bool slow = false;
  std::string data_dir = "data/mnist";
  std::string work = "acceptance-work";
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--slow") slow = true;
    else if (arg == "--data" && i + 1 < argc) data_dir = argv[++i];
    else if (arg == "--work" && i + 1 < argc) work = argv[++i];
    else {
      std::fprintf(stderr,
                   "usage: %s [--slow] [--data <mnist dir>] [--work <dir>]\n",
                   argv[0]);
      return 2;
    }
  }
  fs::create_directories(work);

  int failed = 0, skipped = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::printf("[%s] criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", id,
                name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  };
  auto skip = [&](int id, const std::string& name) {
    std::printf("[SKIP] criterion %d: %s (requires --slow)\n", id,
                name.c_str());
    ++skipped;
  };
  auto guard = [&](auto&& fn) -> Outcome {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "autodiff gradients match central finite differences",
         guard([] { return criterion_gradients(); }));
  report(2, "iterative pruning follows the 1-0.8^k sparsity law",
         guard([] { return criterion_prune_algebra(); }));
  report(3, "symmetric label noise statistics",
         guard([] { return criterion_noise(); }));
  report(4, "loss identities (alpha=0 CE, KL sign, uniform CE)",
         guard([] { return criterion_loss_identities(); }));
  report(5, "bitwise deterministic runs and sweeps",
         guard([&] { return criterion_determinism(work); }));

  if (slow) {
    try {
      SlowRuns runs = execute_slow_runs(data_dir, work);
      report(6, "double descent appears at lambda=0 and flattens under l2",
             guard([&] { return criterion_sdd(runs); }));
      report(7, "round-level early stopping contrast",
             guard([&] { return criterion_early_stop(runs); }));
      report(8, "distilled students avoid the dip",
             guard([&] { return criterion_kd(runs, work); }));
    } catch (const std::exception& e) {
      Outcome err{false, std::string("pipeline exception: ") + e.what()};
      report(6, "double descent appears at lambda=0 and flattens under l2",
             err);
      report(7, "round-level early stopping contrast", err);
      report(8, "distilled students avoid the dip", err);
    }
  } else {
    skip(6, "double descent appears at lambda=0 and flattens under l2");
    skip(7, "round-level early stopping contrast");
    skip(8, "distilled students avoid the dip");
  }

  report(9, "FLOPs accounting",
         guard([&] { return criterion_flops(work); }));

  std::printf("acceptance: %d passed, %d failed, %d skipped\n",
              9 - failed - skipped, failed, skipped);
  return failed == 0 ? 0 : 1;
}
