#include "sdd/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <utility>

#include "sdd/blas.hpp"
#include "sdd/error.hpp"

namespace sdd {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

namespace {

void validate_shape(const Shape& s) {
  if (s.empty()) throw ShapeError("tensor shape must have at least one dim");
  for (int d : s)
    if (d <= 0)
      throw ShapeError("tensor dims must be positive, got " + shape_str(s));
}

void check_finite_span(const double* p, int64_t n, const char* what) {
  for (int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) {
      std::ostringstream os;
      os << what << ": non-finite value " << p[i] << " at flat index " << i;
      throw NumericError(os.str());
    }
  }
}

}  // namespace

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  validate_shape(shape);
  if (shape_numel(shape) != static_cast<int64_t>(data.size()))
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
}

Tensor Tensor::zeros(Shape s) {
  validate_shape(s);
  std::vector<double> d(static_cast<size_t>(shape_numel(s)), 0.0);
  return Tensor(std::move(s), std::move(d));
}

Tensor Tensor::full(Shape s, double v) {
  validate_shape(s);
  std::vector<double> d(static_cast<size_t>(shape_numel(s)), v);
  return Tensor(std::move(s), std::move(d));
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  std::memset(grad.data(), 0, grad.size() * sizeof(double));
}

void Tensor::check_finite(const char* what) const {
  check_finite_span(data.data(), size(), what);
}

const Shape& Value::shape() const { return tape_->node(idx_).shape; }

const std::vector<double>& Value::data() const {
  const auto& n = tape_->node(idx_);
  return n.external != nullptr ? n.external->data : n.data;
}

double Value::scalar() const {
  const auto& d = data();
  if (d.size() != 1)
    throw ShapeError("scalar() on node of shape " + shape_str(tape_->node(idx_).shape));
  return d[0];
}

// Accessor for a node's forward values regardless of leaf/owned storage.
// Leaf nodes alias the external tensor, which must stay unmodified between
// op recording and backward().
#define NODE_DATA(n) ((n).external != nullptr ? (n).external->data : (n).data)

int Tape::check(Value v, const char* op) const {
  if (v.tape_ != this)
    throw StateError(std::string(op) + ": value does not belong to this tape");
  if (v.idx_ < 0 || v.idx_ >= static_cast<int>(nodes_.size()))
    throw StateError(std::string(op) + ": stale value handle");
  return v.idx_;
}

int Tape::push(Node n) {
  check_finite_span(n.data.data(), static_cast<int64_t>(n.data.size()),
                    "tape op output");
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Value Tape::leaf(Tensor& t) {
  Node n;
  n.shape = t.shape;
  n.external = &t;
  n.op = Op::kLeaf;
  n.needs_grad = t.requires_grad;
  nodes_.push_back(std::move(n));  // input finiteness owned by the caller
  return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::constant(Tensor t) {
  // Checked at the boundary: a NaN constant could pass through relu's
  // zero branch without ever tripping an op-output check.
  t.check_finite("constant");
  Node n;
  n.shape = std::move(t.shape);
  n.data = std::move(t.data);
  n.op = Op::kConstant;
  n.needs_grad = false;
  nodes_.push_back(std::move(n));
  return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::matmul(Value a, Value b) {
  int ia = check(a, "matmul"), ib = check(b, "matmul");
  const Node& na = node(ia);
  const Node& nb = node(ib);
  if (na.shape.size() != 2 || nb.shape.size() != 2 ||
      na.shape[1] != nb.shape[0])
    throw ShapeError("matmul: incompatible shapes " + shape_str(na.shape) +
                     " and " + shape_str(nb.shape));
  int m = na.shape[0], k = na.shape[1], nn = nb.shape[1];
  Node out;
  out.shape = {m, nn};
  out.data.resize(static_cast<size_t>(m) * nn);
  dgemm(false, false, m, nn, k, 1.0, NODE_DATA(na).data(), k,
        NODE_DATA(nb).data(), nn, 0.0, out.data.data(), nn);
  out.op = Op::kMatmul;
  out.in0 = ia;
  out.in1 = ib;
  out.needs_grad = na.needs_grad || nb.needs_grad;
  return Value(this, push(std::move(out)));
}

Value Tape::add(Value a, Value b) {
  int ia = check(a, "add"), ib = check(b, "add");
  const Node& na = node(ia);
  const Node& nb = node(ib);
  if (na.shape != nb.shape)
    throw ShapeError("add: shape mismatch " + shape_str(na.shape) + " vs " +
                     shape_str(nb.shape));
  const auto& ad = NODE_DATA(na);
  const auto& bd = NODE_DATA(nb);
  Node out;
  out.shape = na.shape;
  out.data.resize(ad.size());
  for (size_t i = 0; i < ad.size(); ++i) out.data[i] = ad[i] + bd[i];
  out.op = Op::kAdd;
  out.in0 = ia;
  out.in1 = ib;
  out.needs_grad = na.needs_grad || nb.needs_grad;
  return Value(this, push(std::move(out)));
}

Value Tape::mul(Value a, Value b) {
  int ia = check(a, "mul"), ib = check(b, "mul");
  const Node& na = node(ia);
  const Node& nb = node(ib);
  if (na.shape != nb.shape)
    throw ShapeError("mul: shape mismatch " + shape_str(na.shape) + " vs " +
                     shape_str(nb.shape));
  const auto& ad = NODE_DATA(na);
  const auto& bd = NODE_DATA(nb);
  Node out;
  out.shape = na.shape;
  out.data.resize(ad.size());
  for (size_t i = 0; i < ad.size(); ++i) out.data[i] = ad[i] * bd[i];
  out.op = Op::kMul;
  out.in0 = ia;
  out.in1 = ib;
  out.needs_grad = na.needs_grad || nb.needs_grad;
  return Value(this, push(std::move(out)));
}

Value Tape::add_rowvec(Value m, Value v) {
  int im = check(m, "add_rowvec"), iv = check(v, "add_rowvec");
  const Node& nm = node(im);
  const Node& nv = node(iv);
  if (nm.shape.size() != 2 || nv.shape.size() != 1 ||
      nm.shape[1] != nv.shape[0])
    throw ShapeError("add_rowvec: shape mismatch " + shape_str(nm.shape) +
                     " vs " + shape_str(nv.shape));
  const auto& md = NODE_DATA(nm);
  const auto& vd = NODE_DATA(nv);
  int rows = nm.shape[0], cols = nm.shape[1];
  Node out;
  out.shape = nm.shape;
  out.data.resize(md.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.data[static_cast<size_t>(r) * cols + c] =
          md[static_cast<size_t>(r) * cols + c] + vd[static_cast<size_t>(c)];
  out.op = Op::kAddRowvec;
  out.in0 = im;
  out.in1 = iv;
  out.needs_grad = nm.needs_grad || nv.needs_grad;
  return Value(this, push(std::move(out)));
}

Value Tape::scale(Value x, double c) {
  int ix = check(x, "scale");
  const Node& nx = node(ix);
  const auto& xd = NODE_DATA(nx);
  Node out;
  out.shape = nx.shape;
  out.data.resize(xd.size());
  for (size_t i = 0; i < xd.size(); ++i) out.data[i] = c * xd[i];
  out.op = Op::kScale;
  out.in0 = ix;
  out.c = c;
  out.needs_grad = nx.needs_grad;
  return Value(this, push(std::move(out)));
}

Value Tape::sum(Value x) {
  int ix = check(x, "sum");
  const Node& nx = node(ix);
  const auto& xd = NODE_DATA(nx);
  double s = 0.0;
  for (double v : xd) s += v;
  Node out;
  out.shape = {1};
  out.data = {s};
  out.op = Op::kSum;
  out.in0 = ix;
  out.needs_grad = nx.needs_grad;
  return Value(this, push(std::move(out)));
}

Value Tape::relu(Value x) {
  int ix = check(x, "relu");
  const Node& nx = node(ix);
  const auto& xd = NODE_DATA(nx);
  Node out;
  out.shape = nx.shape;
  out.data.resize(xd.size());
  for (size_t i = 0; i < xd.size(); ++i)
    out.data[i] = xd[i] > 0.0 ? xd[i] : 0.0;
  out.op = Op::kRelu;
  out.in0 = ix;
  out.needs_grad = nx.needs_grad;
  return Value(this, push(std::move(out)));
}

namespace {

// Row-wise log-softmax of logits/tau, written into lsm (same layout).
void log_softmax_rows(const double* logits, int rows, int cols, double tau,
                      double* lsm) {
  for (int r = 0; r < rows; ++r) {
    const double* in = logits + static_cast<size_t>(r) * cols;
    double* out = lsm + static_cast<size_t>(r) * cols;
    double mx = in[0] / tau;
    for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c] / tau);
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) {
      out[c] = in[c] / tau - mx;
      acc += std::exp(out[c]);
    }
    double lse = std::log(acc);
    for (int c = 0; c < cols; ++c) out[c] -= lse;
  }
}

}  // namespace

Value Tape::softmax_cross_entropy(Value logits, const std::vector<int>& targets) {
  int il = check(logits, "softmax_cross_entropy");
  const Node& nl = node(il);
  if (nl.shape.size() != 2)
    throw ShapeError("softmax_cross_entropy: logits must be rank 2, got " +
                     shape_str(nl.shape));
  int rows = nl.shape[0], cols = nl.shape[1];
  if (static_cast<int>(targets.size()) != rows)
    throw InputError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(rows) + " rows");
  for (int r = 0; r < rows; ++r)
    if (targets[static_cast<size_t>(r)] < 0 || targets[static_cast<size_t>(r)] >= cols)
      throw InputError("softmax_cross_entropy: target " +
                       std::to_string(targets[static_cast<size_t>(r)]) + " at row " +
                       std::to_string(r) + " outside [0," + std::to_string(cols) + ")");

  const auto& ld = NODE_DATA(nl);
  Node out;
  out.saved.resize(ld.size());  // softmax probabilities for backward
  log_softmax_rows(ld.data(), rows, cols, 1.0, out.saved.data());
  double loss = 0.0;
  for (int r = 0; r < rows; ++r)
    loss -= out.saved[static_cast<size_t>(r) * cols + targets[static_cast<size_t>(r)]];
  for (double& v : out.saved) v = std::exp(v);
  out.shape = {1};
  out.data = {loss / rows};
  out.targets = targets;
  out.op = Op::kSoftmaxCe;
  out.in0 = il;
  out.needs_grad = nl.needs_grad;
  return Value(this, push(std::move(out)));
}

Value Tape::kl_divergence_loss(Value student, Value teacher, double tau) {
  int is = check(student, "kl_divergence_loss");
  int it = check(teacher, "kl_divergence_loss");
  const Node& ns = node(is);
  const Node& nt = node(it);
  if (ns.shape.size() != 2 || ns.shape != nt.shape)
    throw ShapeError("kl_divergence_loss: student " + shape_str(ns.shape) +
                     " vs teacher " + shape_str(nt.shape));
  if (!(tau > 0.0))
    throw InputError("kl_divergence_loss: temperature must be > 0, got " +
                     std::to_string(tau));
  int rows = ns.shape[0], cols = ns.shape[1];
  const auto& sd = NODE_DATA(ns);
  const auto& td = NODE_DATA(nt);
  size_t n = sd.size();

  Node out;
  out.saved.resize(2 * n);  // [teacher probs p | student probs q]
  std::vector<double> lp(n), lq(n);
  log_softmax_rows(td.data(), rows, cols, tau, lp.data());
  log_softmax_rows(sd.data(), rows, cols, tau, lq.data());
  double loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double p = std::exp(lp[i]);
    out.saved[i] = p;
    out.saved[n + i] = std::exp(lq[i]);
    if (p > 0.0) loss += p * (lp[i] - lq[i]);
  }
  loss *= tau * tau / rows;
  if (loss < 0.0 && loss > -1e-12) loss = 0.0;  // rounding guard
  out.shape = {1};
  out.data = {loss};
  out.op = Op::kKlLoss;
  out.in0 = is;
  out.in1 = it;
  out.c = tau;
  out.needs_grad = ns.needs_grad;
  return Value(this, push(std::move(out)));
}

Value Tape::masked_linear(Value x, Value w, Value mask, Value bias) {
  int ix = check(x, "masked_linear"), iw = check(w, "masked_linear");
  int im = check(mask, "masked_linear"), ib = check(bias, "masked_linear");
  const Node& nx = node(ix);
  const Node& nw = node(iw);
  const Node& nm = node(im);
  const Node& nb = node(ib);
  if (nx.shape.size() != 2 || nw.shape.size() != 2)
    throw ShapeError("masked_linear: need rank-2 input/weight, got " +
                     shape_str(nx.shape) + " and " + shape_str(nw.shape));
  if (nx.shape[1] != nw.shape[1])
    throw ShapeError("masked_linear: input " + shape_str(nx.shape) +
                     " vs weight " + shape_str(nw.shape));
  if (nm.shape != nw.shape)
    throw ShapeError("masked_linear: mask " + shape_str(nm.shape) +
                     " vs weight " + shape_str(nw.shape));
  if (nb.shape.size() != 1 || nb.shape[0] != nw.shape[0])
    throw ShapeError("masked_linear: bias " + shape_str(nb.shape) +
                     " vs weight " + shape_str(nw.shape));
  int batch = nx.shape[0], in = nx.shape[1], outdim = nw.shape[0];
  const auto& xd = NODE_DATA(nx);
  const auto& wd = NODE_DATA(nw);
  const auto& md = NODE_DATA(nm);
  const auto& bd = NODE_DATA(nb);

  Node out;
  out.saved.resize(wd.size());  // effective weight w . mask
  for (size_t i = 0; i < wd.size(); ++i) out.saved[i] = wd[i] * md[i];
  out.shape = {batch, outdim};
  out.data.resize(static_cast<size_t>(batch) * outdim);
  // out = x * (w.mask)ᵀ
  dgemm(false, true, batch, outdim, in, 1.0, xd.data(), in, out.saved.data(),
        in, 0.0, out.data.data(), outdim);
  for (int r = 0; r < batch; ++r)
    for (int c = 0; c < outdim; ++c)
      out.data[static_cast<size_t>(r) * outdim + c] += bd[static_cast<size_t>(c)];
  out.op = Op::kMaskedLinear;
  out.in0 = ix;
  out.in1 = iw;
  out.in2 = im;
  out.in3 = ib;
  out.needs_grad = nx.needs_grad || nw.needs_grad || nb.needs_grad;
  return Value(this, push(std::move(out)));
}

void Tape::backward(Value root) {
  int ir = check(root, "backward");
  if (backward_done_)
    throw StateError("backward already ran on this tape; call reset() first");
  Node& r = node(ir);
  if (shape_numel(r.shape) != 1)
    throw StateError("backward root must be scalar, got shape " +
                     shape_str(r.shape));
  backward_done_ = true;  // a rejected call must not consume the sweep
  r.grad.assign(1, 1.0);
  for (int i = ir; i >= 0; --i) {
    Node& n = node(i);
    if (!n.needs_grad || n.grad.empty()) continue;
    backward_node(i);
    if (n.external != nullptr && n.external->requires_grad) {
      n.external->ensure_grad();
      for (size_t j = 0; j < n.grad.size(); ++j)
        n.external->grad[j] += n.grad[j];
    }
  }
}

namespace {

std::vector<double>& grad_buf(std::vector<double>& g, size_t n) {
  if (g.empty()) g.assign(n, 0.0);
  return g;
}

}  // namespace

void Tape::backward_node(int i) {
  Node& n = node(i);
  const std::vector<double>& g = n.grad;
  switch (n.op) {
    case Op::kLeaf:
    case Op::kConstant:
      break;
    case Op::kMatmul: {
      Node& a = node(n.in0);
      Node& b = node(n.in1);
      int m = a.shape[0], k = a.shape[1], nn = b.shape[1];
      if (a.needs_grad) {
        grad_buf(a.grad, NODE_DATA(a).size());
        // dA += dC * Bᵀ
        dgemm(false, true, m, k, nn, 1.0, g.data(), nn, NODE_DATA(b).data(),
              nn, 1.0, a.grad.data(), k);
      }
      if (b.needs_grad) {
        grad_buf(b.grad, NODE_DATA(b).size());
        // dB += Aᵀ * dC
        dgemm(true, false, k, nn, m, 1.0, NODE_DATA(a).data(), k, g.data(),
              nn, 1.0, b.grad.data(), nn);
      }
      break;
    }
    case Op::kAdd: {
      Node& a = node(n.in0);
      Node& b = node(n.in1);
      if (a.needs_grad) {
        grad_buf(a.grad, NODE_DATA(a).size());
        for (size_t j = 0; j < g.size(); ++j) a.grad[j] += g[j];
      }
      if (b.needs_grad) {
        grad_buf(b.grad, NODE_DATA(b).size());
        for (size_t j = 0; j < g.size(); ++j) b.grad[j] += g[j];
      }
      break;
    }
    case Op::kMul: {
      Node& a = node(n.in0);
      Node& b = node(n.in1);
      if (a.needs_grad) {
        grad_buf(a.grad, NODE_DATA(a).size());
        const auto& bd = NODE_DATA(b);
        for (size_t j = 0; j < g.size(); ++j) a.grad[j] += g[j] * bd[j];
      }
      if (b.needs_grad) {
        grad_buf(b.grad, NODE_DATA(b).size());
        const auto& ad = NODE_DATA(a);
        for (size_t j = 0; j < g.size(); ++j) b.grad[j] += g[j] * ad[j];
      }
      break;
    }
    case Op::kAddRowvec: {
      Node& m = node(n.in0);
      Node& v = node(n.in1);
      int rows = m.shape[0], cols = m.shape[1];
      if (m.needs_grad) {
        grad_buf(m.grad, NODE_DATA(m).size());
        for (size_t j = 0; j < g.size(); ++j) m.grad[j] += g[j];
      }
      if (v.needs_grad) {
        grad_buf(v.grad, NODE_DATA(v).size());
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            v.grad[static_cast<size_t>(c)] += g[static_cast<size_t>(r) * cols + c];
      }
      break;
    }
    case Op::kScale: {
      Node& x = node(n.in0);
      if (x.needs_grad) {
        grad_buf(x.grad, NODE_DATA(x).size());
        for (size_t j = 0; j < g.size(); ++j) x.grad[j] += n.c * g[j];
      }
      break;
    }
    case Op::kSum: {
      Node& x = node(n.in0);
      if (x.needs_grad) {
        grad_buf(x.grad, NODE_DATA(x).size());
        for (size_t j = 0; j < x.grad.size(); ++j) x.grad[j] += g[0];
      }
      break;
    }
    case Op::kRelu: {
      Node& x = node(n.in0);
      if (x.needs_grad) {
        grad_buf(x.grad, NODE_DATA(x).size());
        const auto& xd = NODE_DATA(x);
        for (size_t j = 0; j < g.size(); ++j)
          if (xd[j] > 0.0) x.grad[j] += g[j];
      }
      break;
    }
    case Op::kSoftmaxCe: {
      Node& l = node(n.in0);
      if (l.needs_grad) {
        grad_buf(l.grad, NODE_DATA(l).size());
        int rows = l.shape[0], cols = l.shape[1];
        double s = g[0] / rows;
        for (int r = 0; r < rows; ++r) {
          const double* p = n.saved.data() + static_cast<size_t>(r) * cols;
          double* out = l.grad.data() + static_cast<size_t>(r) * cols;
          int t = n.targets[static_cast<size_t>(r)];
          for (int c = 0; c < cols; ++c)
            out[c] += s * (p[c] - (c == t ? 1.0 : 0.0));
        }
      }
      break;
    }
    case Op::kKlLoss: {
      Node& s = node(n.in0);
      if (s.needs_grad) {
        size_t nelem = NODE_DATA(s).size();
        grad_buf(s.grad, nelem);
        int rows = s.shape[0];
        const double* p = n.saved.data();
        const double* q = n.saved.data() + nelem;
        double f = g[0] * n.c / rows;  // tau^2 / (B*tau) = tau / B
        for (size_t j = 0; j < nelem; ++j) s.grad[j] += f * (q[j] - p[j]);
      }
      break;
    }
    case Op::kMaskedLinear: {
      Node& x = node(n.in0);
      Node& w = node(n.in1);
      Node& m = node(n.in2);
      Node& b = node(n.in3);
      int batch = x.shape[0], in = x.shape[1], outdim = w.shape[0];
      if (x.needs_grad) {
        grad_buf(x.grad, NODE_DATA(x).size());
        // dX += dOut * (w.mask)
        dgemm(false, false, batch, in, outdim, 1.0, g.data(), outdim,
              n.saved.data(), in, 1.0, x.grad.data(), in);
      }
      if (w.needs_grad) {
        grad_buf(w.grad, NODE_DATA(w).size());
        // dW += (dOutᵀ * x) . mask
        std::vector<double> scratch(NODE_DATA(w).size());
        dgemm(true, false, outdim, in, batch, 1.0, g.data(), outdim,
              NODE_DATA(x).data(), in, 0.0, scratch.data(), in);
        const auto& md = NODE_DATA(m);
        for (size_t j = 0; j < scratch.size(); ++j)
          w.grad[j] += scratch[j] * md[j];
      }
      if (b.needs_grad) {
        grad_buf(b.grad, NODE_DATA(b).size());
        for (int r = 0; r < batch; ++r)
          for (int c = 0; c < outdim; ++c)
            b.grad[static_cast<size_t>(c)] += g[static_cast<size_t>(r) * outdim + c];
      }
      break;
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

}  // namespace sdd
