#include "sdd/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sdd/error.hpp"
#include "sdd/rng.hpp"
#include "sdd/stats.hpp"

namespace sdd {

void LabeledDataset::validate() const {
  int64_t n = size();
  if (inputs.shape.size() != 2)
    throw ShapeError("dataset inputs must be rank 2, got " +
                     shape_str(inputs.shape));
  if (static_cast<int64_t>(labels.size()) != n ||
      static_cast<int64_t>(clean_labels.size()) != n)
    throw CountMismatchError(
        "dataset has " + std::to_string(n) + " inputs but " +
        std::to_string(labels.size()) + " labels / " +
        std::to_string(clean_labels.size()) + " clean labels");
  if (class_count <= 0)
    throw InputError("dataset class_count must be positive, got " +
                     std::to_string(class_count));
  for (int64_t i = 0; i < n; ++i) {
    if (labels[static_cast<size_t>(i)] < 0 ||
        labels[static_cast<size_t>(i)] >= class_count ||
        clean_labels[static_cast<size_t>(i)] < 0 ||
        clean_labels[static_cast<size_t>(i)] >= class_count)
      throw InputError("dataset label out of range at index " +
                       std::to_string(i));
  }
  for (double v : inputs.data)
    if (!(v >= 0.0 && v <= 1.0))
      throw NumericError("dataset input outside [0,1]: " + std::to_string(v));
}

namespace {

bool has_gz_suffix(const std::string& path) {
  return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
  if (has_gz_suffix(path)) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (f == nullptr) throw IoError("cannot open " + path);
    std::vector<unsigned char> out;
    unsigned char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0)
      out.insert(out.end(), buf, buf + n);
    bool bad = n < 0;
    gzclose(f);
    if (bad) throw IoError("gzip inflation failed for " + path);
    return out;
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(f),
                                    std::istreambuf_iterator<char>());
}

uint32_t be32(const unsigned char* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

std::string hex32(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

struct IdxHeader {
  uint32_t magic = 0;
  std::vector<uint32_t> dims;
  size_t payload_offset = 0;
};

IdxHeader parse_idx(const std::vector<unsigned char>& bytes, uint32_t expected_magic,
                    const std::string& path) {
  if (bytes.size() < 4)
    throw TruncatedError(path + ": too short for an IDX magic number");
  IdxHeader h;
  h.magic = be32(bytes.data());
  if (h.magic != expected_magic)
    throw MagicError(path + ": expected magic " + hex32(expected_magic) +
                     ", got " + hex32(h.magic));
  size_t ndims = h.magic & 0xff;
  if (bytes.size() < 4 + 4 * ndims)
    throw TruncatedError(path + ": header truncated");
  for (size_t i = 0; i < ndims; ++i)
    h.dims.push_back(be32(bytes.data() + 4 + 4 * i));
  h.payload_offset = 4 + 4 * ndims;
  size_t expect = 1;
  for (uint32_t d : h.dims) expect *= d;
  if (bytes.size() < h.payload_offset + expect)
    throw TruncatedError(path + ": payload has " +
                         std::to_string(bytes.size() - h.payload_offset) +
                         " bytes, header promises " + std::to_string(expect));
  return h;
}

}  // namespace

LabeledDataset load_idx_dataset(const std::string& images_path,
                                const std::string& labels_path) {
  const uint32_t kImagesMagic = 0x00000803;
  const uint32_t kLabelsMagic = 0x00000801;

  std::vector<unsigned char> ibytes = read_file_bytes(images_path);
  IdxHeader ih = parse_idx(ibytes, kImagesMagic, images_path);
  std::vector<unsigned char> lbytes = read_file_bytes(labels_path);
  IdxHeader lh = parse_idx(lbytes, kLabelsMagic, labels_path);

  uint32_t n = ih.dims[0];
  if (lh.dims[0] != n)
    throw CountMismatchError(images_path + " has " + std::to_string(n) +
                             " images but " + labels_path + " has " +
                             std::to_string(lh.dims[0]) + " labels");
  int d = static_cast<int>(ih.dims[1] * ih.dims[2]);

  LabeledDataset ds;
  ds.inputs = Tensor::zeros({static_cast<int>(n), d});
  const unsigned char* px = ibytes.data() + ih.payload_offset;
  for (size_t i = 0; i < static_cast<size_t>(n) * d; ++i)
    ds.inputs.data[i] = px[i] / 255.0;
  const unsigned char* lb = lbytes.data() + lh.payload_offset;
  ds.labels.resize(n);
  int maxl = 0;
  for (size_t i = 0; i < n; ++i) {
    ds.labels[i] = lb[i];
    maxl = std::max(maxl, ds.labels[i]);
  }
  ds.clean_labels = ds.labels;
  ds.class_count = maxl + 1;
  ds.validate();
  return ds;
}

LabeledDataset inject_symmetric_noise(const LabeledDataset& ds,
                                      const NoiseSpec& spec) {
  if (spec.epsilon < 0.0 || spec.epsilon > 1.0)
    throw InputError("noise epsilon must be in [0,1], got " +
                     std::to_string(spec.epsilon));
  if (ds.class_count < 2 && spec.epsilon > 0.0)
    throw InputError("cannot flip labels with a single class");

  LabeledDataset out = ds;
  int64_t n = ds.size();
  int64_t k = std::llround(spec.epsilon * static_cast<double>(n));
  if (k == 0) return out;

  Rng rng(spec.seed);
  // Partial Fisher-Yates: after k steps the last k slots hold a uniform
  // sample without replacement.
  std::vector<int64_t> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int64_t i = 0; i < k; ++i) {
    int64_t j = static_cast<int64_t>(rng.below(static_cast<uint64_t>(n - i)));
    std::swap(idx[static_cast<size_t>(n - 1 - i)], idx[static_cast<size_t>(j)]);
  }
  for (int64_t i = 0; i < k; ++i) {
    int64_t pos = idx[static_cast<size_t>(n - 1 - i)];
    int old = out.labels[static_cast<size_t>(pos)];
    // Uniform over the other class_count - 1 classes, never the original.
    int repl = static_cast<int>(rng.below(static_cast<uint64_t>(ds.class_count - 1)));
    if (repl >= old) ++repl;
    out.labels[static_cast<size_t>(pos)] = repl;
  }
  return out;
}

namespace {

LabeledDataset gather(const LabeledDataset& ds, const std::vector<int64_t>& rows) {
  LabeledDataset out;
  out.class_count = ds.class_count;
  int d = ds.feature_dim();
  out.inputs = Tensor::zeros({static_cast<int>(rows.size()), d});
  out.labels.resize(rows.size());
  out.clean_labels.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const double* src = ds.inputs.data.data() + rows[i] * d;
    std::memcpy(out.inputs.data.data() + static_cast<int64_t>(i) * d, src,
                static_cast<size_t>(d) * sizeof(double));
    out.labels[i] = ds.labels[static_cast<size_t>(rows[i])];
    out.clean_labels[i] = ds.clean_labels[static_cast<size_t>(rows[i])];
  }
  return out;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds,
                                                double train_fraction,
                                                uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InputError("train_fraction must be in (0,1), got " +
                     std::to_string(train_fraction));
  int64_t n = ds.size();
  int64_t k = std::llround(train_fraction * static_cast<double>(n));
  if (k <= 0 || k >= n)
    throw InputError("degenerate split: " + std::to_string(k) + " / " +
                     std::to_string(n - k) + " samples");
  std::vector<int64_t> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  shuffle(idx, rng);
  std::vector<int64_t> first(idx.begin(), idx.begin() + k);
  std::vector<int64_t> second(idx.begin() + k, idx.end());
  return {gather(ds, first), gather(ds, second)};
}

LabeledDataset synth_blobs(int class_count, int per_class, int dim,
                           double spread, uint64_t seed) {
  if (class_count <= 0 || per_class <= 0 || dim <= 0)
    throw InputError("synth_blobs: class_count, per_class and dim must be positive");
  if (spread < 0.0)
    throw InputError("synth_blobs: spread must be >= 0, got " +
                     std::to_string(spread));
  Rng rng(seed);
  std::vector<double> centers(static_cast<size_t>(class_count) * dim);
  for (double& c : centers) c = rng.uniform(-1.0, 1.0);

  int64_t n = static_cast<int64_t>(class_count) * per_class;
  LabeledDataset ds;
  ds.class_count = class_count;
  ds.inputs = Tensor::zeros({static_cast<int>(n), dim});
  ds.labels.resize(static_cast<size_t>(n));
  int64_t row = 0;
  for (int c = 0; c < class_count; ++c) {
    for (int s = 0; s < per_class; ++s, ++row) {
      double* dst = ds.inputs.data.data() + row * dim;
      const double* ctr = centers.data() + static_cast<size_t>(c) * dim;
      for (int j = 0; j < dim; ++j) dst[j] = ctr[j] + spread * rng.normal();
      ds.labels[static_cast<size_t>(row)] = c;
    }
  }
  // Rescale into [0, 1] to honor the dataset range invariant.
  double lo = ds.inputs.data[0], hi = ds.inputs.data[0];
  for (double v : ds.inputs.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double range = hi > lo ? hi - lo : 1.0;
  for (double& v : ds.inputs.data) v = (v - lo) / range;
  ds.clean_labels = ds.labels;
  ds.validate();
  return ds;
}

LabeledDataset take_prefix(const LabeledDataset& ds, int64_t n) {
  if (n <= 0 || n > ds.size())
    throw InputError("take_prefix: n = " + std::to_string(n) +
                     " outside [1, " + std::to_string(ds.size()) + "]");
  std::vector<int64_t> rows(static_cast<size_t>(n));
  std::iota(rows.begin(), rows.end(), 0);
  return gather(ds, rows);
}

FlipStats audit_noise(const LabeledDataset& ds) {
  FlipStats st;
  st.total = ds.size();
  int c = ds.class_count;
  st.transition.assign(static_cast<size_t>(c),
                       std::vector<int64_t>(static_cast<size_t>(c), 0));
  for (int64_t i = 0; i < st.total; ++i) {
    int from = ds.clean_labels[static_cast<size_t>(i)];
    int to = ds.labels[static_cast<size_t>(i)];
    if (from != to) {
      ++st.flipped;
      ++st.transition[static_cast<size_t>(from)][static_cast<size_t>(to)];
    }
  }
  if (c < 3) return st;  // no uniformity test with fewer than 2 alternatives

  // Pool per-source-class goodness of fit against uniform over the other
  // c - 1 classes; fully specified null, so each class contributes c - 2
  // degrees of freedom.
  for (int from = 0; from < c; ++from) {
    int64_t flips = 0;
    for (int to = 0; to < c; ++to)
      if (to != from) flips += st.transition[static_cast<size_t>(from)][static_cast<size_t>(to)];
    if (flips == 0) continue;
    double expect = static_cast<double>(flips) / (c - 1);
    for (int to = 0; to < c; ++to) {
      if (to == from) continue;
      double d = st.transition[static_cast<size_t>(from)][static_cast<size_t>(to)] - expect;
      st.chi_square += d * d / expect;
    }
    st.dof += c - 2;
  }
  if (st.dof > 0) st.p_value = chi_square_p_value(st.chi_square, st.dof);
  return st;
}

}  // namespace sdd
