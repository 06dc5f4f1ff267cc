// Dense double-precision tensors plus a reverse-mode autodiff tape.
//
// Tensors are plain values. A Tape records primitive operations in the
// order they execute (so every node's inputs precede it) and replays the
// record backwards exactly once to accumulate gradients into the leaf
// tensors that requested them. Handles (Value) stay valid until reset().
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sdd {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Tensor {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // same length as data once ensure_grad ran

  Tensor() = default;
  Tensor(Shape s, std::vector<double> d);

  static Tensor zeros(Shape s);
  static Tensor full(Shape s, double v);

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  void ensure_grad();
  void zero_grad();
  // Throws NumericError naming `what` if any element is NaN/Inf.
  void check_finite(const char* what) const;
};

class Tape;

// Handle to a tape node.
class Value {
 public:
  Value() = default;
  const Shape& shape() const;
  const std::vector<double>& data() const;
  double scalar() const;  // value of a single-element node
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Value(Tape* t, int idx) : tape_(t), idx_(idx) {}
  Tape* tape_ = nullptr;
  int idx_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers an external tensor. If t.requires_grad, backward() adds the
  // computed gradient into t.grad. The tensor must outlive the tape use.
  Value leaf(Tensor& t);
  // Owned constant input; no gradient ever flows into it.
  Value constant(Tensor t);

  // a[m x k] * b[k x n] -> [m x n]
  Value matmul(Value a, Value b);
  // Elementwise; shapes must match exactly.
  Value add(Value a, Value b);
  Value mul(Value a, Value b);
  // m[r x c] + row vector v[c] broadcast over rows.
  Value add_rowvec(Value m, Value v);
  Value scale(Value x, double c);
  // Sum of all elements -> scalar.
  Value sum(Value x);
  // max(x, 0); subgradient at exactly 0 is 0.
  Value relu(Value x);

  // Mean over rows of (logsumexp(row) - row[target]); numerically
  // stabilized by per-row max subtraction. Gradient w.r.t. logits is
  // (softmax - onehot) / batch.
  Value softmax_cross_entropy(Value logits, const std::vector<int>& targets);

  // tau^2 * mean_rows KL(softmax(teacher/tau) || softmax(student/tau)).
  // The teacher is treated as a constant: gradient flows to the student
  // logits only.
  Value kl_divergence_loss(Value student, Value teacher, double tau);

  // Fused masked dense layer: x[B x in] * (w[out x in] . mask)ᵀ + bias[out].
  // The mask is constant; weight gradients are masked on accumulation.
  Value masked_linear(Value x, Value w, Value mask, Value bias);

  // Reverse sweep from a scalar root. Each node is visited exactly once.
  // Throws StateError if called again without reset() in between.
  void backward(Value root);
  void reset();

  size_t node_count() const { return nodes_.size(); }

 private:
  friend class Value;
  enum class Op : uint8_t {
    kLeaf,
    kConstant,
    kMatmul,
    kAdd,
    kMul,
    kAddRowvec,
    kScale,
    kSum,
    kRelu,
    kSoftmaxCe,
    kKlLoss,
    kMaskedLinear,
  };
  struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    std::vector<double> saved;  // op-specific forward cache
    std::vector<int> targets;
    Tensor* external = nullptr;
    Op op = Op::kLeaf;
    int in0 = -1, in1 = -1, in2 = -1, in3 = -1;
    double c = 0.0;
    bool needs_grad = false;
  };

  int check(Value v, const char* op) const;
  int push(Node n);
  Node& node(int i) { return nodes_[static_cast<size_t>(i)]; }
  const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
  void backward_node(int i);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace sdd
