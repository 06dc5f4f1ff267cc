// SGD training with momentum, milestone learning-rate decay, coupled L2
// weight decay on surviving weights, and an optional distillation term.
//
// The objective is (1 - alpha) * CE(student, labels)
//                + alpha * tau^2 * KL(soft teacher || soft student);
// alpha = 0 reduces bitwise to plain cross-entropy. The teacher's logits
// are recomputed per batch and treated as constants.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdd/dataset.hpp"
#include "sdd/mlp.hpp"

namespace sdd {

struct OptimizerPolicy {
  double base_lr = 0.1;
  double momentum = 0.9;
  std::vector<int> milestones = {80, 120};  // epochs where lr decays
  double decay_factor = 0.1;
  double lambda_l2 = 0.0;  // coupled decay, surviving weights only
  int epochs = 160;
  int batch_size = 128;
  void validate() const;
};

// lr_at(e) = base_lr * decay_factor^(number of milestones <= e).
double lr_at(const OptimizerPolicy& policy, int epoch);

enum class TeacherKind : uint8_t { kNone = 0, kDense = 1, kBestFitPruned = 2 };

struct KdConfig {
  double alpha = 0.0;  // in [0, 1]; 0 disables distillation
  double tau = 4.0;
  std::string teacher_checkpoint;  // required iff alpha > 0
  TeacherKind teacher_kind = TeacherKind::kNone;
  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;      // mini-batch average over the epoch
  double train_accuracy = 0.0;  // vs (possibly noisy) labels, batch-averaged
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double lr_used = 0.0;
};

// Momentum buffers, laid out like the model; masked entries stay zero.
struct SgdState {
  std::vector<std::vector<double>> vel_w;
  std::vector<std::vector<double>> vel_b;
  static SgdState zeros_like(const MlpModel& model);
};

// One update: g' = g + lambda * w on surviving weights (biases undecayed),
// v <- momentum * v + g', w <- w - lr_at(epoch) * v, then w and v are
// re-masked so pruned coordinates stay bitwise zero. Requires populated
// gradients (StateError otherwise).
void sgd_step(MlpModel& model, SgdState& state, const OptimizerPolicy& policy,
              int epoch);

// Builds the combined objective on the tape. teacher_logits may be null
// iff kd.alpha == 0. With alpha == 0 the returned node IS the CE node.
Value total_loss(Tape& tape, Value student_logits,
                 const std::vector<int>& targets, const Value* teacher_logits,
                 const KdConfig& kd);

enum class LabelSource : uint8_t { kNoisy = 0, kClean = 1 };

struct EvalResult {
  double accuracy = 0.0;
  double ce_loss = 0.0;
};

// Inference-mode evaluation; argmax ties resolve to the lowest index.
EvalResult evaluate_metrics(const MlpModel& model, const LabeledDataset& ds,
                            LabelSource source);
double evaluate(const MlpModel& model, const LabeledDataset& ds,
                LabelSource source);

// Full training loop. Shuffles per epoch with seeds derived from run_seed,
// evaluates val/test at each epoch end when provided (NaN otherwise),
// aborts with NumericError naming epoch and batch if the loss goes
// non-finite. epochs == 0 returns an empty vector and leaves the model
// untouched. teacher must be non-null iff kd.alpha > 0.
std::vector<EpochMetrics> train(MlpModel& model, const LabeledDataset& train_ds,
                                const LabeledDataset* val_ds,
                                const LabeledDataset* test_ds,
                                const OptimizerPolicy& policy,
                                const KdConfig& kd, const MlpModel* teacher,
                                uint64_t run_seed);

}  // namespace sdd
