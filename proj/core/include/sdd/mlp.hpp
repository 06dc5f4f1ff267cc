// Masked multilayer perceptron built from dense layers.
//
// Every layer carries a 0/1 mask with the same shape as its weight matrix;
// the effective weight used in any forward pass is weight . mask. Masked
// positions hold exact 0.0 in both weight and mask so sparsity is a
// bitwise-checkable property, not an approximation.
#pragma once

#include <cstdint>
#include <vector>

#include "sdd/tensor.hpp"

namespace sdd {

enum class Activation : uint8_t { kRelu = 0, kNone = 1 };

struct DenseLayer {
  Tensor weight;  // [out x in], requires_grad
  Tensor bias;    // [out], requires_grad; never masked or decayed
  Tensor mask;    // [out x in], entries exactly 0.0 or 1.0
  Activation activation = Activation::kRelu;

  int out_dim() const { return weight.dim(0); }
  int in_dim() const { return weight.dim(1); }
  int64_t weight_count() const { return weight.size(); }
  int64_t surviving_count() const;
};

struct MlpModel {
  std::vector<DenseLayer> layers;
  int input_dim = 0;
  int class_count = 0;

  int64_t parameter_count() const;  // weights + biases
  int64_t weight_count() const;     // prunable entries only
  int64_t surviving_count() const;
  void zero_grad();
  // Re-applies every mask bitwise (weight = weight * mask).
  void apply_masks();
};

// Kaiming-uniform fan-in init: weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
// biases zero, masks all-ones. Hidden layers use ReLU, the output layer is
// linear. hidden_dims may be empty (single linear layer).
MlpModel build_mlp(int input_dim, const std::vector<int>& hidden_dims,
                   int class_count, uint64_t seed);

// Records the masked forward pass on the tape; batch is [B x input_dim].
// Returns the logits node [B x class_count].
Value forward(MlpModel& model, Tape& tape, Value batch);

// Inference-mode forward; no tape, no gradients. Same arithmetic as the
// taped forward, so predictions agree bitwise.
Tensor forward_logits(const MlpModel& model, const Tensor& batch);

// Flat mutable view over all weight entries in the documented stable order:
// layer index ascending, then row-major within each layer. Biases excluded.
class FlatPrunable {
 public:
  explicit FlatPrunable(MlpModel& model);
  int64_t size() const { return total_; }
  double& weight(int64_t i);
  double& mask(int64_t i);

 private:
  struct Span {
    double* w;
    double* m;
    int64_t n;
  };
  std::vector<Span> spans_;
  std::vector<int64_t> offsets_;  // prefix sums, offsets_[k] = start of span k
  int64_t total_ = 0;
};

// Mean/variance over surviving weights (population variance).
struct WeightStats {
  int64_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
};
WeightStats surviving_weight_stats(const MlpModel& model);

// Equal-width histogram over surviving weight values. Degenerate range
// (all values equal) puts every count into the first bin. The upper edge
// is inclusive for the last bin. Errors if no weights survive.
struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<int64_t> counts;
};
Histogram weight_histogram(const MlpModel& model, int bin_count);

}  // namespace sdd
