#include "sdd/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdd/blas.hpp"
#include "sdd/error.hpp"
#include "sdd/rng.hpp"

namespace sdd {

int64_t DenseLayer::surviving_count() const {
  int64_t n = 0;
  for (double m : mask.data) n += (m != 0.0);
  return n;
}

int64_t MlpModel::parameter_count() const {
  int64_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

int64_t MlpModel::weight_count() const {
  int64_t n = 0;
  for (const auto& l : layers) n += l.weight.size();
  return n;
}

int64_t MlpModel::surviving_count() const {
  int64_t n = 0;
  for (const auto& l : layers) n += l.surviving_count();
  return n;
}

void MlpModel::zero_grad() {
  for (auto& l : layers) {
    l.weight.zero_grad();
    l.bias.zero_grad();
  }
}

void MlpModel::apply_masks() {
  for (auto& l : layers)
    for (size_t i = 0; i < l.weight.data.size(); ++i)
      l.weight.data[i] *= l.mask.data[i];
}

MlpModel build_mlp(int input_dim, const std::vector<int>& hidden_dims,
                   int class_count, uint64_t seed) {
  if (input_dim <= 0)
    throw InputError("build_mlp: input_dim must be positive, got " +
                     std::to_string(input_dim));
  if (class_count <= 0)
    throw InputError("build_mlp: class_count must be positive, got " +
                     std::to_string(class_count));
  for (int h : hidden_dims)
    if (h <= 0)
      throw InputError("build_mlp: hidden dims must be positive, got " +
                       std::to_string(h));

  MlpModel model;
  model.input_dim = input_dim;
  model.class_count = class_count;
  Rng rng(seed);

  std::vector<int> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(class_count);

  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    int fan_in = dims[i], fan_out = dims[i + 1];
    DenseLayer layer;
    layer.weight = Tensor::zeros({fan_out, fan_in});
    layer.weight.requires_grad = true;
    double bound = std::sqrt(6.0 / fan_in);
    for (double& w : layer.weight.data) w = rng.uniform(-bound, bound);
    layer.bias = Tensor::zeros({fan_out});
    layer.bias.requires_grad = true;
    layer.mask = Tensor::full({fan_out, fan_in}, 1.0);
    layer.activation =
        (i + 2 < dims.size()) ? Activation::kRelu : Activation::kNone;
    model.layers.push_back(std::move(layer));
  }
  return model;
}

Value forward(MlpModel& model, Tape& tape, Value batch) {
  if (model.layers.empty()) throw StateError("forward: model has no layers");
  if (batch.shape().size() != 2 || batch.shape()[1] != model.input_dim)
    throw ShapeError("forward: batch " + shape_str(batch.shape()) +
                     " does not match input_dim " +
                     std::to_string(model.input_dim));
  Value h = batch;
  for (auto& l : model.layers) {
    Value w = tape.leaf(l.weight);
    Value m = tape.leaf(l.mask);
    Value b = tape.leaf(l.bias);
    h = tape.masked_linear(h, w, m, b);
    if (l.activation == Activation::kRelu) h = tape.relu(h);
  }
  return h;
}

Tensor forward_logits(const MlpModel& model, const Tensor& batch) {
  if (model.layers.empty())
    throw StateError("forward_logits: model has no layers");
  if (batch.shape.size() != 2 || batch.dim(1) != model.input_dim)
    throw ShapeError("forward_logits: batch " + shape_str(batch.shape) +
                     " does not match input_dim " +
                     std::to_string(model.input_dim));
  int rows = batch.dim(0);
  std::vector<double> cur = batch.data;
  int cur_cols = batch.dim(1);
  std::vector<double> effw, next;
  for (const auto& l : model.layers) {
    int outdim = l.out_dim(), in = l.in_dim();
    effw.resize(l.weight.data.size());
    for (size_t i = 0; i < effw.size(); ++i)
      effw[i] = l.weight.data[i] * l.mask.data[i];
    next.assign(static_cast<size_t>(rows) * outdim, 0.0);
    dgemm(false, true, rows, outdim, in, 1.0, cur.data(), cur_cols,
          effw.data(), in, 0.0, next.data(), outdim);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < outdim; ++c)
        next[static_cast<size_t>(r) * outdim + c] += l.bias.data[static_cast<size_t>(c)];
    if (l.activation == Activation::kRelu)
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    cur.swap(next);
    cur_cols = outdim;
  }
  Tensor out({rows, cur_cols}, std::move(cur));
  out.check_finite("forward_logits output");
  return out;
}

FlatPrunable::FlatPrunable(MlpModel& model) {
  for (auto& l : model.layers) {
    spans_.push_back({l.weight.data.data(), l.mask.data.data(),
                      static_cast<int64_t>(l.weight.data.size())});
    offsets_.push_back(total_);
    total_ += spans_.back().n;
  }
}

double& FlatPrunable::weight(int64_t i) {
  size_t k = static_cast<size_t>(
      std::upper_bound(offsets_.begin(), offsets_.end(), i) -
      offsets_.begin() - 1);
  return spans_[k].w[i - offsets_[k]];
}

double& FlatPrunable::mask(int64_t i) {
  size_t k = static_cast<size_t>(
      std::upper_bound(offsets_.begin(), offsets_.end(), i) -
      offsets_.begin() - 1);
  return spans_[k].m[i - offsets_[k]];
}

WeightStats surviving_weight_stats(const MlpModel& model) {
  WeightStats st;
  double sum = 0.0;
  for (const auto& l : model.layers)
    for (size_t i = 0; i < l.weight.data.size(); ++i)
      if (l.mask.data[i] != 0.0) {
        sum += l.weight.data[i];
        ++st.count;
      }
  if (st.count == 0) return st;
  st.mean = sum / st.count;
  double acc = 0.0;
  for (const auto& l : model.layers)
    for (size_t i = 0; i < l.weight.data.size(); ++i)
      if (l.mask.data[i] != 0.0) {
        double d = l.weight.data[i] - st.mean;
        acc += d * d;
      }
  st.variance = acc / st.count;
  return st;
}

Histogram weight_histogram(const MlpModel& model, int bin_count) {
  if (bin_count <= 0)
    throw InputError("weight_histogram: bin_count must be positive, got " +
                     std::to_string(bin_count));
  bool any = false;
  double lo = 0.0, hi = 0.0;
  for (const auto& l : model.layers)
    for (size_t i = 0; i < l.weight.data.size(); ++i)
      if (l.mask.data[i] != 0.0) {
        double w = l.weight.data[i];
        if (!any) {
          lo = hi = w;
          any = true;
        } else {
          lo = std::min(lo, w);
          hi = std::max(hi, w);
        }
      }
  if (!any)
    throw StateError("weight_histogram: no surviving weights to bin");

  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(static_cast<size_t>(bin_count), 0);
  double width = (hi - lo) / bin_count;
  for (const auto& l : model.layers)
    for (size_t i = 0; i < l.weight.data.size(); ++i)
      if (l.mask.data[i] != 0.0) {
        int b = 0;
        if (width > 0.0) {
          b = static_cast<int>((l.weight.data[i] - lo) / width);
          if (b >= bin_count) b = bin_count - 1;  // hi lands in the last bin
        }
        ++h.counts[static_cast<size_t>(b)];
      }
  return h;
}

}  // namespace sdd
