#include "confold/metrics.hpp"

#include <cmath>
#include <set>

#include "confold/model.hpp"

namespace confold {

void ScoredSet::add(Prediction prediction, std::string truth) {
  if (!prediction.abstained() && !(prediction.confidence >= 0.0 && prediction.confidence <= 1.0))
    throw Error("prediction confidence outside [0,1]");
  pairs_.emplace_back(std::move(prediction), std::move(truth));
}

namespace {

void require_nonempty(const ScoredSet& s, const char* what) {
  if (s.empty()) throw Error(std::string(what) + " of an empty scored set");
}

}  // namespace

double accuracy(const ScoredSet& s) {
  require_nonempty(s, "accuracy");
  std::size_t correct = 0;
  for (const auto& [pred, truth] : s.pairs()) correct += pred.cls && *pred.cls == truth;
  return static_cast<double>(correct) / static_cast<double>(s.size());
}

namespace {

double squared_error_sum(const ScoredSet& s) {
  require_nonempty(s, "Brier score");
  double sum = 0.0;
  for (const auto& [pred, truth] : s.pairs()) {
    if (pred.abstained()) {
      sum += 0.25;
      continue;
    }
    const double y = *pred.cls == truth ? 1.0 : 0.0;
    const double d = pred.confidence - y;
    sum += d * d;
  }
  return sum;
}

}  // namespace

double one_class_brier(const ScoredSet& s) { return squared_error_sum(s) / static_cast<double>(s.size()); }

// Summed as (n - errors) / n so that definite predictions reproduce accuracy bit for bit.
double ibs(const ScoredSet& s) {
  const double n = static_cast<double>(s.size());
  return (n - squared_error_sum(s)) / n;
}

double multiclass_brier(const ScoredSet& s, std::span<const ClassDistribution> distributions) {
  require_nonempty(s, "Brier score");
  if (distributions.size() != s.size()) throw Error("one class distribution per scored example required");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& dist = distributions[i];
    const auto& truth = s.pairs()[i].second;
    double mass = 0.0;
    for (const auto& [cls, p] : dist) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error("class probability outside [0,1]");
      mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-9) throw Error("class distribution does not sum to 1");
    for (const auto& [cls, p] : dist) {
      const double y = cls == truth ? 1.0 : 0.0;
      sum += (p - y) * (p - y);
    }
    if (!dist.contains(truth)) sum += 1.0;
  }
  return sum / static_cast<double>(s.size());
}

}  // namespace confold
