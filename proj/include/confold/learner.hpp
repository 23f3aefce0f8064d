#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "confold/model.hpp"

namespace confold {

struct LearnerConfig {
  double ratio = 0.5;                   // stop growing a body once fp <= ratio * tp
  double improvement_threshold = 0.0;   // t_imp; 0 disables exception pruning
  double confidence_threshold = 0.0;    // t_con
  double z = 3.0;
  std::optional<std::size_t> max_exception_depth;
  bool confidence_post_pass = false;    // filter by t_con after training instead of in the loop

  void validate() const;
};

struct SplitCounts {
  std::size_t tp = 0;  // covered positives
  std::size_t fp = 0;  // covered negatives
  std::size_t tn = 0;  // uncovered negatives
  std::size_t fn = 0;  // uncovered positives
};

/// Majority label; ties go to the lexicographically smallest class.
std::string most(std::span<const Example* const> examples);
std::string most(const Dataset& data);

std::pair<ExampleRefs, ExampleRefs> split_by_literal(std::span<const Example* const> examples,
                                                     const std::string& label);

/// Weighted binary-entropy gain (bits). Throws Error on all-zero counts.
double information_gain(const SplitCounts& counts);

/// Highest-gain literal with tp >= 1 and gain > 0. Candidates are f = v and
/// f \= v for categorical features, f =< v and f > v for numeric features,
/// over every value v observed in pos or neg. Ties prefer larger tp, then
/// schema order, operator order (=, \=, =<, >) and the smaller value.
std::optional<Literal> best_literal(const Schema& schema, std::span<const Example* const> pos,
                                    std::span<const Example* const> neg, std::span<const Literal> excluded = {});

/// Hands out rule{i} / ab{j} symbols in creation order.
class RuleNamer {
 public:
  std::string next_rule() { return "rule" + std::to_string(++rules_); }
  std::string next_ab() { return "ab" + std::to_string(++abs_); }

  /// Continues numbering after any rule{i}/ab{j} already present in `rules`.
  void reserve(std::span<const Rule> rules);

 private:
  std::size_t rules_ = 0;
  std::size_t abs_ = 0;
};

struct LearnedRule {
  Rule rule;              // top-level: head is the class, calls the body symbol
  std::vector<Rule> aux;  // body rule first, then exceptions in pre-order
};

LearnedRule learn_rule(const Schema& schema, const std::string& cls, std::span<const Example* const> pos,
                       std::span<const Example* const> neg, const LearnerConfig& cfg, RuleNamer& namer);

/// Wilson confidence of (r, aux) on the given positives and negatives.
double conf(const Rule& r, std::span<const Rule> aux, std::span<const Example* const> pos,
            std::span<const Example* const> neg, double z);

struct IterationTrace {
  std::size_t iteration = 0;
  std::string cls;
  std::size_t worklist_before = 0;
  std::size_t worklist_after = 0;
  std::size_t positives_covered = 0;
  double confidence = 0.0;
  bool kept = false;
  bool stopped = false;  // the learned rule covered no positives
};

using IterationHook = std::function<void(const IterationTrace&)>;

/// Sequential covering over a worklist that loses every covered example,
/// positive or negative. Shared by confold and knowledge injection.
class Trainer {
 public:
  Trainer(const Dataset& data, const LearnerConfig& cfg, IterationHook hook = {});

  /// Adds a provided rule at the current end of the decision list.
  void add_rule(AnnotatedRule rule, bool prunable, bool has_confidence);

  void learn();

  Program finish() &&;

  const ExampleRefs& worklist() const { return worklist_; }
  RuleNamer& namer() { return namer_; }

 private:
  // Removes covered examples from the worklist; returns positives covered.
  std::size_t consume(const Rule& r, std::span<const Rule> aux, const std::string& cls,
                      ExampleRefs& pos, ExampleRefs& neg);

  const Dataset& data_;
  LearnerConfig cfg_;
  IterationHook hook_;
  ExampleRefs worklist_;
  RuleNamer namer_;
  std::vector<AnnotatedRule> rules_;
  std::size_t iteration_ = 0;
};

Program confold(const Dataset& data, const LearnerConfig& cfg, IterationHook hook = {});

}  // namespace confold
