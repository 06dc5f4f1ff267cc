#include "sdd/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include "sdd/error.hpp"
#include "sdd/rng.hpp"

namespace sdd {

void OptimizerPolicy::validate() const {
  if (!(base_lr > 0.0))
    throw InputError("base_lr must be > 0, got " + std::to_string(base_lr));
  if (momentum < 0.0 || momentum >= 1.0)
    throw InputError("momentum must be in [0,1), got " + std::to_string(momentum));
  if (!(decay_factor > 0.0 && decay_factor <= 1.0))
    throw InputError("decay_factor must be in (0,1], got " +
                     std::to_string(decay_factor));
  if (lambda_l2 < 0.0)
    throw InputError("lambda_l2 must be >= 0, got " + std::to_string(lambda_l2));
  if (epochs < 0)
    throw InputError("epochs must be >= 0, got " + std::to_string(epochs));
  if (batch_size <= 0)
    throw InputError("batch_size must be > 0, got " + std::to_string(batch_size));
  if (!std::is_sorted(milestones.begin(), milestones.end()))
    throw InputError("lr milestones must be sorted ascending");
}

double lr_at(const OptimizerPolicy& policy, int epoch) {
  if (epoch < 0)
    throw InputError("lr_at: epoch must be >= 0, got " + std::to_string(epoch));
  int hits = 0;
  for (int m : policy.milestones)
    if (m <= epoch) ++hits;
  return policy.base_lr * std::pow(policy.decay_factor, hits);
}

void KdConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0)
    throw InputError("kd alpha must be in [0,1], got " + std::to_string(alpha));
  if (!(tau > 0.0))
    throw InputError("kd tau must be > 0, got " + std::to_string(tau));
  if (alpha > 0.0 && teacher_checkpoint.empty())
    throw InputError("kd alpha > 0 requires a teacher checkpoint");
}

SgdState SgdState::zeros_like(const MlpModel& model) {
  SgdState st;
  for (const auto& l : model.layers) {
    st.vel_w.emplace_back(l.weight.data.size(), 0.0);
    st.vel_b.emplace_back(l.bias.data.size(), 0.0);
  }
  return st;
}

void sgd_step(MlpModel& model, SgdState& state, const OptimizerPolicy& policy,
              int epoch) {
  if (state.vel_w.size() != model.layers.size())
    throw StateError("sgd_step: velocity state does not match the model");
  double lr = lr_at(policy, epoch);
  double mu = policy.momentum;
  double lam = policy.lambda_l2;
  for (size_t li = 0; li < model.layers.size(); ++li) {
    DenseLayer& l = model.layers[li];
    if (l.weight.grad.size() != l.weight.data.size() ||
        l.bias.grad.size() != l.bias.data.size())
      throw StateError("sgd_step: gradients missing for layer " +
                       std::to_string(li));
    double* w = l.weight.data.data();
    double* g = l.weight.grad.data();
    double* v = state.vel_w[li].data();
    const double* m = l.mask.data.data();
    size_t n = l.weight.data.size();
    for (size_t i = 0; i < n; ++i) {
      if (m[i] == 0.0) {
        // Pruned coordinate: keep weight and velocity bitwise zero.
        v[i] = 0.0;
        w[i] = 0.0;
        continue;
      }
      double gp = g[i] + lam * w[i];
      v[i] = mu * v[i] + gp;
      w[i] -= lr * v[i];
    }
    double* b = l.bias.data.data();
    double* gb = l.bias.grad.data();
    double* vb = state.vel_b[li].data();
    for (size_t i = 0; i < l.bias.data.size(); ++i) {
      vb[i] = mu * vb[i] + gb[i];
      b[i] -= lr * vb[i];
    }
  }
}

Value total_loss(Tape& tape, Value student_logits,
                 const std::vector<int>& targets, const Value* teacher_logits,
                 const KdConfig& kd) {
  kd.validate();
  Value ce = tape.softmax_cross_entropy(student_logits, targets);
  if (kd.alpha == 0.0) return ce;
  if (teacher_logits == nullptr)
    throw InputError("total_loss: alpha > 0 requires teacher logits");
  Value kl = tape.kl_divergence_loss(student_logits, *teacher_logits, kd.tau);
  return tape.add(tape.scale(ce, 1.0 - kd.alpha), tape.scale(kl, kd.alpha));
}

namespace {

constexpr int kEvalBatch = 2048;

int argmax_row(const double* p, int cols) {
  int best = 0;
  for (int c = 1; c < cols; ++c)
    if (p[c] > p[best]) best = c;  // ties keep the lowest index
  return best;
}

Tensor gather_rows(const LabeledDataset& ds, const std::vector<int64_t>& order,
                   int64_t begin, int64_t end) {
  int d = ds.feature_dim();
  Tensor batch = Tensor::zeros({static_cast<int>(end - begin), d});
  for (int64_t i = begin; i < end; ++i)
    std::memcpy(batch.data.data() + (i - begin) * d,
                ds.inputs.data.data() + order[static_cast<size_t>(i)] * d,
                static_cast<size_t>(d) * sizeof(double));
  return batch;
}

}  // namespace

EvalResult evaluate_metrics(const MlpModel& model, const LabeledDataset& ds,
                            LabelSource source) {
  const std::vector<int>& labels =
      source == LabelSource::kClean ? ds.clean_labels : ds.labels;
  int64_t n = ds.size();
  if (n == 0) throw InputError("evaluate: empty dataset");
  int cols = model.class_count;
  int d = ds.feature_dim();
  int64_t correct = 0;
  double loss = 0.0;
  for (int64_t at = 0; at < n; at += kEvalBatch) {
    int64_t end = std::min(n, at + kEvalBatch);
    int rows = static_cast<int>(end - at);
    Tensor batch({rows, d},
                 std::vector<double>(ds.inputs.data.begin() + at * d,
                                     ds.inputs.data.begin() + end * d));
    Tensor logits = forward_logits(model, batch);
    for (int r = 0; r < rows; ++r) {
      const double* row = logits.data.data() + static_cast<size_t>(r) * cols;
      int y = labels[static_cast<size_t>(at + r)];
      if (argmax_row(row, cols) == y) ++correct;
      // Stable per-row cross entropy: logsumexp(row) - row[y].
      double mx = row[0];
      for (int c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
      double acc = 0.0;
      for (int c = 0; c < cols; ++c) acc += std::exp(row[c] - mx);
      loss += std::log(acc) + mx - row[y];
    }
  }
  return {static_cast<double>(correct) / static_cast<double>(n),
          loss / static_cast<double>(n)};
}

double evaluate(const MlpModel& model, const LabeledDataset& ds,
                LabelSource source) {
  return evaluate_metrics(model, ds, source).accuracy;
}

std::vector<EpochMetrics> train(MlpModel& model, const LabeledDataset& train_ds,
                                const LabeledDataset* val_ds,
                                const LabeledDataset* test_ds,
                                const OptimizerPolicy& policy,
                                const KdConfig& kd, const MlpModel* teacher,
                                uint64_t run_seed) {
  policy.validate();
  kd.validate();
  train_ds.validate();
  if ((kd.alpha > 0.0) != (teacher != nullptr))
    throw InputError("train: teacher model must be supplied iff kd.alpha > 0");

  std::vector<EpochMetrics> history;
  if (policy.epochs == 0) return history;

  int64_t n = train_ds.size();
  SgdState state = SgdState::zeros_like(model);
  Tape tape;
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> targets;

  for (int epoch = 0; epoch < policy.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(run_seed, "epoch-shuffle", static_cast<uint64_t>(epoch)));
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    int64_t correct = 0;
    int batch_index = 0;
    for (int64_t at = 0; at < n; at += policy.batch_size, ++batch_index) {
      int64_t end = std::min(n, at + policy.batch_size);
      int rows = static_cast<int>(end - at);
      Tensor batch = gather_rows(train_ds, order, at, end);
      targets.resize(static_cast<size_t>(rows));
      for (int64_t i = at; i < end; ++i)
        targets[static_cast<size_t>(i - at)] =
            train_ds.labels[static_cast<size_t>(order[static_cast<size_t>(i)])];

      tape.reset();
      Value x = tape.constant(std::move(batch));
      Value logits = forward(model, tape, x);
      Value loss;
      if (kd.alpha > 0.0) {
        Tensor tbatch = gather_rows(train_ds, order, at, end);
        Value tv = tape.constant(forward_logits(*teacher, tbatch));
        loss = total_loss(tape, logits, targets, &tv, kd);
      } else {
        loss = total_loss(tape, logits, targets, nullptr, kd);
      }
      double lv = loss.scalar();
      if (!std::isfinite(lv)) {
        std::ostringstream os;
        os << "training diverged: non-finite loss at epoch " << epoch
           << ", batch " << batch_index;
        throw NumericError(os.str());
      }
      loss_sum += lv * rows;
      const auto& ld = logits.data();
      for (int r = 0; r < rows; ++r)
        if (argmax_row(ld.data() + static_cast<size_t>(r) * model.class_count,
                       model.class_count) == targets[static_cast<size_t>(r)])
          ++correct;

      tape.backward(loss);
      sgd_step(model, state, policy, epoch);
      model.zero_grad();
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.lr_used = lr_at(policy, epoch);
    em.train_loss = loss_sum / static_cast<double>(n);
    em.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    em.val_accuracy = val_ds != nullptr
                          ? evaluate(model, *val_ds, LabelSource::kClean)
                          : std::numeric_limits<double>::quiet_NaN();
    em.test_accuracy = test_ds != nullptr
                           ? evaluate(model, *test_ds, LabelSource::kClean)
                           : std::numeric_limits<double>::quiet_NaN();
    history.push_back(em);
  }
  return history;
}

}  // namespace sdd
