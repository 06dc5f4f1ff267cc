#include "sdd/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdd/error.hpp"

namespace sdd {

void SparsityCurve::validate() const {
  if (points.empty()) throw InputError("sparsity curve has no points");
  for (size_t i = 0; i < points.size(); ++i) {
    const CurvePoint& p = points[i];
    if (!(p.sparsity >= 0.0 && p.sparsity < 1.0))
      throw InputError("curve sparsity outside [0,1) at point " +
                       std::to_string(i));
    if (!(p.train_acc >= 0.0 && p.train_acc <= 1.0) ||
        !(p.test_acc >= 0.0 && p.test_acc <= 1.0))
      throw InputError("curve accuracy outside [0,1] at point " +
                       std::to_string(i));
    if (!std::isfinite(p.test_loss) || p.test_loss < 0.0)
      throw NumericError("curve test loss invalid at point " +
                         std::to_string(i));
    if (p.cumulative_flops < 0)
      throw InputError("curve cumulative FLOPs negative at point " +
                       std::to_string(i));
    if (i > 0) {
      if (!(p.sparsity > points[i - 1].sparsity))
        throw InputError("curve sparsity must strictly increase at point " +
                         std::to_string(i));
      if (p.cumulative_flops < points[i - 1].cumulative_flops)
        throw InputError("curve cumulative FLOPs must not decrease at point " +
                         std::to_string(i));
    }
  }
}

SparsityCurve curve_from_records(const std::vector<RoundRecord>& records) {
  SparsityCurve curve;
  int64_t cum = 0;
  for (const auto& r : records) {
    cum += r.flops;
    curve.points.push_back(
        {r.sparsity, r.train_acc, r.test_acc, r.test_loss, cum});
  }
  curve.validate();
  return curve;
}

const char* curve_class_name(CurveClass c) {
  switch (c) {
    case CurveClass::kSparseDoubleDescent:
      return "sparse_double_descent";
    case CurveClass::kMonotoneWithinTol:
      return "monotone_within_tol";
    case CurveClass::kNoisyFlat:
      return "noisy_flat";
  }
  return "unknown";
}

std::vector<double> median3(const std::vector<double>& xs) {
  std::vector<double> out = xs;
  for (size_t i = 1; i + 1 < xs.size(); ++i) {
    double a = xs[i - 1], b = xs[i], c = xs[i + 1];
    out[i] = std::max(std::min(a, b), std::min(std::max(a, b), c));
  }
  return out;
}

namespace {

// Unimodal within tolerance: drops before the (first) smoothed peak and
// rises after it are both bounded by tol. Covers flat and monotone curves.
bool unimodal_within_tol(const std::vector<double>& s, double tol) {
  size_t p = static_cast<size_t>(
      std::max_element(s.begin(), s.end()) - s.begin());
  double run_max = s[0];
  for (size_t i = 1; i <= p; ++i) {
    if (run_max - s[i] > tol) return false;
    run_max = std::max(run_max, s[i]);
  }
  double run_min = s[p];
  for (size_t i = p + 1; i < s.size(); ++i) {
    if (s[i] - run_min > tol) return false;
    run_min = std::min(run_min, s[i]);
  }
  return true;
}

}  // namespace

SddVerdict detect_sdd(const SparsityCurve& curve, double tol) {
  curve.validate();
  if (!(tol >= 0.0 && tol < 1.0))
    throw InputError("detect_sdd: tol must be in [0,1), got " +
                     std::to_string(tol));

  std::vector<double> raw;
  raw.reserve(curve.points.size());
  for (const auto& p : curve.points) raw.push_back(p.test_acc);
  std::vector<double> s = median3(raw);
  int n = static_cast<int>(s.size());

  SddVerdict v;
  v.tol = tol;

  // First peak: first index not strictly below its successor's value.
  int peak = n - 1;
  for (int i = 0; i + 1 < n; ++i) {
    if (s[static_cast<size_t>(i)] >= s[static_cast<size_t>(i + 1)]) {
      peak = i;
      break;
    }
  }
  v.peak_index = peak;

  // Running minimum after the peak; recovery is the first index rising
  // more than tol above it while the dip sits more than tol below the peak.
  int dip = -1;
  double dip_val = 0.0;
  int recovery_cross = -1;
  for (int j = peak + 1; j < n; ++j) {
    if (dip < 0 || s[static_cast<size_t>(j)] < dip_val) {
      dip = j;
      dip_val = s[static_cast<size_t>(j)];
      continue;
    }
    if (dip >= 0 && s[static_cast<size_t>(j)] - dip_val > tol &&
        s[static_cast<size_t>(peak)] - dip_val > tol) {
      recovery_cross = j;
      break;
    }
  }

  if (recovery_cross >= 0) {
    // Second peak: earliest argmax at or after the recovery crossing.
    int m2 = recovery_cross;
    for (int j = recovery_cross + 1; j < n; ++j)
      if (s[static_cast<size_t>(j)] > s[static_cast<size_t>(m2)]) m2 = j;
    v.is_sdd = true;
    v.classification = CurveClass::kSparseDoubleDescent;
    v.dip_index = dip;
    v.recovery_index = m2;
    v.dip_depth = s[static_cast<size_t>(peak)] - dip_val;
    v.recovery_height = s[static_cast<size_t>(m2)] - dip_val;
    v.phases.push_back({0, peak});
    if (dip > peak) v.phases.push_back({peak + 1, dip});
    if (m2 > dip) v.phases.push_back({dip + 1, m2});
    if (m2 < n - 1) v.phases.push_back({m2 + 1, n - 1});
    return v;
  }

  v.is_sdd = false;
  v.classification = unimodal_within_tol(s, tol)
                         ? CurveClass::kMonotoneWithinTol
                         : CurveClass::kNoisyFlat;
  if (dip >= 0 && s[static_cast<size_t>(peak)] - dip_val > tol) {
    v.dip_index = dip;  // dip without recovery, reported for diagnostics
    v.dip_depth = s[static_cast<size_t>(peak)] - dip_val;
  }
  return v;
}

StopDecision early_stop_round(std::span<const double> test_acc_so_far,
                              int patience, double tol) {
  if (patience <= 0)
    throw InputError("early_stop_round: patience must be >= 1, got " +
                     std::to_string(patience));
  if (tol < 0.0)
    throw InputError("early_stop_round: tol must be >= 0, got " +
                     std::to_string(tol));
  double best = -1.0;
  int consecutive_bad = 0;
  for (double acc : test_acc_so_far) {
    if (acc > best) best = acc;
    if (acc < best - tol)
      ++consecutive_bad;
    else
      consecutive_bad = 0;
  }
  return consecutive_bad >= patience ? StopDecision::kStop
                                     : StopDecision::kContinue;
}

int early_stop_index(std::span<const double> test_acc, int patience,
                     double tol) {
  for (size_t k = 0; k < test_acc.size(); ++k) {
    if (early_stop_round(test_acc.subspan(0, k + 1), patience, tol) ==
        StopDecision::kStop)
      return static_cast<int>(k);
  }
  return -1;
}

int64_t forward_flops(const MlpModel& model) {
  int64_t f = 0;
  for (const auto& l : model.layers) f += 2 * l.surviving_count();
  return f;
}

int64_t training_flops(const MlpModel& model, int64_t n_samples, int epochs) {
  if (n_samples < 0)
    throw InputError("training_flops: n_samples must be >= 0");
  if (epochs < 0) throw InputError("training_flops: epochs must be >= 0");
  return 3 * forward_flops(model) * n_samples * epochs;
}

double co2_grams(double flops, double flops_per_joule,
                 double grams_co2_per_kwh) {
  if (flops < 0.0)
    throw InputError("co2_grams: flops must be >= 0");
  if (!(flops_per_joule > 0.0))
    throw InputError("co2_grams: flops_per_joule must be > 0 (mandatory factor)");
  if (!(grams_co2_per_kwh > 0.0))
    throw InputError("co2_grams: grams_co2_per_kwh must be > 0 (mandatory factor)");
  double joules = flops / flops_per_joule;
  double kwh = joules / 3.6e6;
  return kwh * grams_co2_per_kwh;
}

}  // namespace sdd
