#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confold/knowledge.hpp"
#include "confold/learner.hpp"
#include "confold/metrics.hpp"
#include "confold/model.hpp"

namespace confold {

// Column name -> forced kind, overriding auto-typing.
using SchemaHints = std::map<std::string, FeatureKind, std::less<>>;

/// Reads a headed CSV. A column is numeric when every non-empty cell parses
/// as a finite real. Empty cells and "?" are Missing. An empty `label`
/// reads unlabelled rows. Throws DataError.
Dataset load_csv(const std::filesystem::path& path, std::string_view label, const SchemaHints& hints = {});
Dataset read_csv(std::istream& in, std::string_view label, const SchemaHints& hints = {});

struct Split {
  Dataset train;
  Dataset test;
};

/// Shuffles with mt19937_64 and cuts at round(fraction * n). With
/// `stratify_min`, examples are swapped in from the test side until every
/// class has a training example; if the training side is smaller than the
/// number of classes it grows instead.
Split stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed, bool stratify_min = false);

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial);

struct Experiment {
  LearnerConfig learner;
  std::size_t trials = 30;
  double train_fraction = 0.8;
  bool stratify_min = false;
  std::uint64_t seed = 1;
  std::vector<KnowledgeRule> knowledge;
  bool verify_export = false;  // re-run every test example through the exported text
  std::size_t jobs = 1;
};

struct TrialReport {
  std::size_t trial_id = 0;
  double accuracy = 0.0;
  double ibs = 0.0;
  std::size_t rule_count = 0;
  std::size_t predicate_count = 0;
  double train_seconds = 0.0;
  std::uint64_t seed = 0;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample deviation, 0 for a single trial
};

Stat summarize(std::span<const double> xs);

struct TrialSummary {
  std::vector<TrialReport> trials;
  Stat accuracy;
  Stat ibs;
  Stat rules;
  Stat predicates;
  Stat train_seconds;
};

/// Trains and scores a program on one split.
TrialReport run_trial(const Split& split, const Experiment& experiment, std::size_t trial_id = 0);

Program fit(const Dataset& train, const Experiment& experiment);

ScoredSet score(const Program& program, const Dataset& test);

/// Throws Error if the exported text, parsed and evaluated bottom-up,
/// disagrees with `classify` on any example or in its literal count.
void verify_export(const Program& program, const Dataset& data);

TrialSummary run_trials(const Dataset& data, const Experiment& experiment);

struct SweepCell {
  double t_imp = 0.0;
  double t_con = 0.0;
  double mean_accuracy = 0.0;
  double mean_rule_count = 0.0;
  double normalized_rule_count = 0.0;  // relative to the (0, 0) cell, or the largest cell without it
  std::size_t trials = 0;
};

/// Runs `experiment` once per (t_imp, t_con) pair, overriding both thresholds.
std::vector<SweepCell> sweep(const Dataset& data, const Experiment& experiment,
                             std::span<const std::pair<double, double>> grid);

std::string trials_csv(const TrialSummary& summary, bool timing = true);
std::string trials_table(const TrialSummary& summary, bool timing = true);
std::string sweep_csv(std::span<const SweepCell> cells);

}  // namespace confold
