#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace confold {

struct Prediction {
  std::optional<std::string> cls;  // nullopt = abstain
  double confidence = 0.0;         // ignored when abstaining

  static Prediction abstain() { return {}; }
  static Prediction of(std::string cls, double confidence) { return {std::move(cls), confidence}; }
  bool abstained() const { return !cls.has_value(); }
};

class ScoredSet {
 public:
  ScoredSet() = default;

  // Throws Error if a non-abstaining confidence lies outside [0,1].
  void add(Prediction prediction, std::string truth);

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  std::span<const std::pair<Prediction, std::string>> pairs() const { return pairs_; }

 private:
  std::vector<std::pair<Prediction, std::string>> pairs_;
};

/// Fraction of correct predictions; abstentions are wrong.
double accuracy(const ScoredSet& s);

/// Mean of (p - y)^2 where p is the reported confidence and y says whether
/// the predicted class is the true one. Abstentions count as p = 0.5.
double one_class_brier(const ScoredSet& s);

/// Inverse Brier Score, 1 - one_class_brier.
double ibs(const ScoredSet& s);

using ClassDistribution = std::map<std::string, double>;

/// Full quadratic score: mean over examples of sum_k (p_k - y_k)^2, with
/// classes absent from a distribution taken as probability 0.
double multiclass_brier(const ScoredSet& s, std::span<const ClassDistribution> distributions);

}  // namespace confold
