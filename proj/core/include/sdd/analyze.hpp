// Sparsity-trajectory analysis: double-descent detection, round-level
// early stopping, and compute/energy accounting.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdd/mlp.hpp"
#include "sdd/prune.hpp"

namespace sdd {

struct CurvePoint {
  double sparsity = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double test_loss = 0.0;
  int64_t cumulative_flops = 0;
};

struct SparsityCurve {
  std::vector<CurvePoint> points;  // strictly increasing sparsity
  void validate() const;
};

SparsityCurve curve_from_records(const std::vector<RoundRecord>& records);

enum class CurveClass : uint8_t {
  kSparseDoubleDescent = 0,
  // Monotone or unimodal within tolerance: the curve never dips by more
  // than tol below its running max and later recovers by more than tol.
  // Covers flat, monotone, and rise-then-decline shapes.
  kMonotoneWithinTol = 1,
  kNoisyFlat = 2,
};

const char* curve_class_name(CurveClass c);

struct PhaseRange {
  int first = 0;
  int last = 0;  // inclusive
};

// Detection runs on the median-of-3 smoothed test-accuracy sequence
// (endpoints pass through unsmoothed):
//   peak:     first index whose smoothed value >= its successor,
//   dip:      running minimum after the peak,
//   recovery: first later index rising more than tol above the dip, with
//             the dip itself more than tol below the peak,
//   second peak: argmax after the recovery crossing (earliest on ties).
// is_sdd requires both the dip depth and the recovery height to exceed
// tol. Indices refer to the original curve positions. Appending points
// below the dip (terminal collapse) never flips a positive verdict.
struct SddVerdict {
  bool is_sdd = false;
  CurveClass classification = CurveClass::kMonotoneWithinTol;
  double tol = 0.0;
  int peak_index = -1;      // first peak (last index of phase 1)
  int dip_index = -1;
  int recovery_index = -1;  // second peak (last index of phase 3)
  double dip_depth = 0.0;       // smoothed peak - smoothed dip
  double recovery_height = 0.0; // smoothed second peak - smoothed dip
  // When is_sdd: 4 contiguous ranges (plateau, dip, recovery, collapse)
  // partitioning [0, n); the final range may be absent if the curve ends
  // on the second peak. Empty otherwise.
  std::vector<PhaseRange> phases;
};

// tol is an accuracy delta in [0, 1). Curves shorter than 3 points are
// never SDD. The verdict echoes tol for downstream reporting.
SddVerdict detect_sdd(const SparsityCurve& curve, double tol);

// Median-of-3 smoothing with unsmoothed endpoints (exposed for tests).
std::vector<double> median3(const std::vector<double>& xs);

enum class StopDecision : uint8_t { kContinue = 0, kStop = 1 };

// Stops once test accuracy has been below (best so far - tol) for
// `patience` consecutive rounds. Pure function of the observed prefix.
StopDecision early_stop_round(std::span<const double> test_acc_so_far,
                              int patience, double tol);

// First round index at which the rule fires when applied prefix by
// prefix; -1 if it never does.
int early_stop_index(std::span<const double> test_acc, int patience,
                     double tol);

// Forward FLOPs per sample, counting multiply and add separately over
// surviving weights only: sum over layers of 2 * surviving(layer).
int64_t forward_flops(const MlpModel& model);

// Training cost model: forward + backward ~ 3x the forward pass,
// applied to every sample every epoch.
int64_t training_flops(const MlpModel& model, int64_t n_samples, int epochs);

// grams of CO2 for a FLOP total given hardware efficiency (FLOPs per
// joule) and grid carbon intensity (grams per kWh). Both factors are
// mandatory; there are no hidden defaults.
double co2_grams(double flops, double flops_per_joule,
                 double grams_co2_per_kwh);

}  // namespace sdd
