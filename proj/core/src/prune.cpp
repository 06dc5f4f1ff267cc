#include "sdd/prune.hpp"

#include <algorithm>
#include <cmath>

#include "sdd/error.hpp"

namespace sdd {

void PruneSchedule::validate() const {
  if (!(zeta_iter > 0.0 && zeta_iter < 1.0))
    throw InputError("zeta_iter must be in (0,1), got " +
                     std::to_string(zeta_iter));
  if (!(zeta_end > 0.0 && zeta_end < 1.0))
    throw InputError("zeta_end must be in (0,1), got " +
                     std::to_string(zeta_end));
}

double sparsity(const MlpModel& model) {
  int64_t total = model.weight_count();
  if (total == 0) throw StateError("sparsity: model has no weights");
  return static_cast<double>(total - model.surviving_count()) /
         static_cast<double>(total);
}

namespace {

struct Candidate {
  double mag;
  int64_t idx;
  bool operator<(const Candidate& o) const {
    return mag != o.mag ? mag < o.mag : idx < o.idx;
  }
};

// Collects surviving entries of [begin, end) in flat order, masks the
// floor(zeta * count) smallest by (|w|, index), zeroing the weights.
int64_t prune_range(FlatPrunable& view, int64_t begin, int64_t end, double zeta) {
  std::vector<Candidate> survivors;
  survivors.reserve(static_cast<size_t>(end - begin));
  for (int64_t i = begin; i < end; ++i)
    if (view.mask(i) != 0.0) survivors.push_back({std::fabs(view.weight(i)), i});
  if (survivors.empty()) return -1;
  int64_t k = static_cast<int64_t>(
      std::floor(zeta * static_cast<double>(survivors.size())));
  if (k <= 0) return 0;
  std::nth_element(survivors.begin(), survivors.begin() + (k - 1), survivors.end());
  for (int64_t i = 0; i < k; ++i) {
    int64_t at = survivors[static_cast<size_t>(i)].idx;
    view.mask(at) = 0.0;
    view.weight(at) = 0.0;
  }
  return k;
}

}  // namespace

int64_t magnitude_prune(MlpModel& model, double zeta_iter, PruneScope scope) {
  if (!(zeta_iter > 0.0 && zeta_iter < 1.0))
    throw InputError("magnitude_prune: zeta_iter must be in (0,1), got " +
                     std::to_string(zeta_iter));
  FlatPrunable view(model);
  if (view.size() == 0) throw StateError("magnitude_prune: model has no weights");

  int64_t removed = 0;
  if (scope == PruneScope::kGlobal) {
    removed = prune_range(view, 0, view.size(), zeta_iter);
    if (removed < 0)
      throw StateError("magnitude_prune: no surviving weights left");
  } else {
    int64_t begin = 0;
    bool any_survivors = false;
    for (const auto& layer : model.layers) {
      int64_t end = begin + layer.weight_count();
      int64_t r = prune_range(view, begin, end, zeta_iter);
      if (r >= 0) {
        any_survivors = true;
        removed += r;
      }
      begin = end;
    }
    if (!any_survivors)
      throw StateError("magnitude_prune: no surviving weights left");
  }
  return removed;
}

}  // namespace sdd
