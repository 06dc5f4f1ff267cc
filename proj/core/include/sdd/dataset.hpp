// Labeled datasets: IDX (MNIST-format) loading with optional gzip,
// synthetic Gaussian blobs, seeded train/validation splitting, symmetric
// label-noise injection, and flip auditing.
//
// Clean labels are retained next to the (possibly noisy) training labels
// so evaluation against ground truth stays possible after injection.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sdd/tensor.hpp"

namespace sdd {

struct LabeledDataset {
  Tensor inputs;                  // [N x D], values in [0, 1]
  std::vector<int> labels;        // training targets (noisy after injection)
  std::vector<int> clean_labels;  // originals, same length
  int class_count = 0;

  int64_t size() const { return inputs.shape.empty() ? 0 : inputs.dim(0); }
  int feature_dim() const { return inputs.shape.size() < 2 ? 0 : inputs.dim(1); }
  // Checks invariants: consistent sizes, labels in [0, class_count),
  // inputs finite and within [0, 1].
  void validate() const;
};

// Reads an IDX image/label file pair. Paths ending in ".gz" are inflated
// with zlib first. Pixels are scaled by 1/255 into [0, 1], flattened
// row-major. Errors: MagicError (wrong magic number, message carries the
// expected and actual values), TruncatedError (payload shorter than the
// header promises), CountMismatchError (image/label counts differ).
LabeledDataset load_idx_dataset(const std::string& images_path,
                                const std::string& labels_path);

struct NoiseSpec {
  double epsilon = 0.0;  // fraction of labels to flip, in [0, 1]
  uint64_t seed = 0;
};

// Symmetric label noise: flips exactly round(epsilon * N) labels, chosen
// uniformly without replacement; each flipped label becomes a uniformly
// random *different* class. clean_labels keeps the originals.
LabeledDataset inject_symmetric_noise(const LabeledDataset& ds,
                                      const NoiseSpec& spec);

// Seeded shuffle, then the first round(N * train_fraction) samples become
// the first element of the pair. Degenerate splits (either side empty)
// raise InputError. Noise injection, when used, happens after splitting
// and only on the training side; this function itself never alters labels.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds,
                                                double train_fraction,
                                                uint64_t seed);

// Isotropic Gaussian blobs: class centers drawn uniformly in [-1, 1]^dim,
// per-class samples at center + spread * N(0, I). The full matrix is then
// affinely rescaled into [0, 1] to honor the dataset range invariant.
LabeledDataset synth_blobs(int class_count, int per_class, int dim,
                           double spread, uint64_t seed);

// Deterministic first-n prefix (shared across seeds by design).
LabeledDataset take_prefix(const LabeledDataset& ds, int64_t n);

// Flip statistics of labels vs clean_labels, plus a uniformity chi-square
// over the replacement classes: for each source class with at least one
// flip, the flips should be uniform over the other class_count - 1
// classes; per-class dof is class_count - 2 and the statistics pool.
struct FlipStats {
  int64_t total = 0;
  int64_t flipped = 0;
  std::vector<std::vector<int64_t>> transition;  // [from][to], flips only
  double chi_square = 0.0;
  int dof = 0;
  double p_value = 1.0;
};
FlipStats audit_noise(const LabeledDataset& ds);

}  // namespace sdd
