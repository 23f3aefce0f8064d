#include "confold/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "confold/pruning.hpp"

namespace confold {

namespace {

// RFC 4180 style: quoted fields may hold commas, newlines and "" escapes.
std::vector<std::vector<std::string>> csv_rows(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c = 0;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  if (any) end_row();
  return rows;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "?"; }

std::optional<double> parse_real(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// std::uniform_int_distribution differs between standard libraries.
std::size_t below(std::mt19937_64& rng, std::size_t bound) {
  const std::uint64_t n = bound;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r = 0;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<std::size_t>(r % n);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Dataset read_csv(std::istream& in, std::string_view label, const SchemaHints& hints) {
  auto rows = csv_rows(in);
  if (rows.empty()) throw DataError("empty file");
  std::vector<std::string> header;
  for (const auto& h : rows.front()) header.push_back(trim(h));
  const std::size_t width = header.size();

  auto label_at = std::find(header.begin(), header.end(), label);
  if (label_at == header.end() && !label.empty()) throw DataError("no label column '" + std::string(label) + "'");
  const auto label_col = static_cast<std::size_t>(label_at - header.begin());  // == width when unlabelled

  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != width)
      throw DataError("row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                      " fields, header has " + std::to_string(width));
    for (auto& cell : rows[r]) cell = trim(cell);
  }

  std::vector<Feature> features;
  std::vector<std::size_t> columns;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == label_col) continue;
    if (header[c].empty()) throw DataError("empty column name at position " + std::to_string(c + 1));
    FeatureKind kind = FeatureKind::Numeric;
    if (auto hint = hints.find(header[c]); hint != hints.end()) {
      kind = hint->second;
    } else {
      for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& cell = rows[r][c];
        if (!is_missing(cell) && !parse_real(cell)) {
          kind = FeatureKind::Categorical;
          break;
        }
      }
    }
    features.push_back(Feature{header[c], kind});
    columns.push_back(c);
  }
  for (const auto& [name, kind] : hints)
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw DataError("hint for unknown column '" + name + "'");

  std::vector<Example> examples;
  examples.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    Example ex;
    ex.id = std::to_string(r);
    if (label_col < width) ex.label = rows[r][label_col];
    if (label_col < width && is_missing(ex.label)) throw DataError("row " + std::to_string(r + 1) + " has no label");
    for (std::size_t f = 0; f < features.size(); ++f) {
      const auto& cell = rows[r][columns[f]];
      if (is_missing(cell)) {
        ex.values.emplace_back(Missing{});
      } else if (features[f].kind == FeatureKind::Numeric) {
        auto v = parse_real(cell);
        if (!v) throw DataError("row " + std::to_string(r + 1) + ": '" + cell + "' in numeric column '" +
                                features[f].name + "'");
        ex.values.emplace_back(*v);
      } else {
        ex.values.emplace_back(cell);
      }
    }
    examples.push_back(std::move(ex));
  }
  return Dataset(Schema(std::move(features)), std::move(examples), std::string(label));
}

Dataset load_csv(const std::filesystem::path& path, std::string_view label, const SchemaHints& hints) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_csv(in, label, hints);
}

Split stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed, bool stratify_min) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train fraction must lie in (0,1)");
  const std::size_t n = data.size();
  std::size_t cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (stratify_min) cut = std::max<std::size_t>(cut, 1);
  if (cut == 0 || cut >= n) throw Error("train fraction leaves one side of the split empty");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[below(rng, i + 1)]);

  if (stratify_min) {
    std::unordered_map<std::string, std::size_t> count;
    for (std::size_t i = 0; i < cut; ++i) ++count[data[order[i]].label];
    for (const auto& cls : data.classes()) {
      if (count[cls] > 0) continue;
      auto pick = std::find_if(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end(),
                               [&](std::size_t i) { return data[i].label == cls; });
      // Give up a training example whose class stays covered, else grow.
      std::size_t slot = cut;
      for (std::size_t i = cut; i-- > 0;) {
        if (count[data[order[i]].label] > 1) {
          slot = i;
          break;
        }
      }
      if (slot == cut) {
        std::iter_swap(order.begin() + static_cast<std::ptrdiff_t>(cut), pick);
        ++cut;
      } else {
        --count[data[order[slot]].label];
        std::iter_swap(order.begin() + static_cast<std::ptrdiff_t>(slot), pick);
      }
      ++count[cls];
    }
    if (cut >= n) throw Error("stratified training side leaves no test examples");
  }

  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  return Split{data.subset(train), data.subset(test)};
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) { return splitmix64(seed + trial); }

Stat summarize(std::span<const double> xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return s;
}

Program fit(const Dataset& train, const Experiment& experiment) {
  if (experiment.knowledge.empty()) return confold(train, experiment.learner);
  return inject(experiment.knowledge, train, experiment.learner);
}

ScoredSet score(const Program& program, const Dataset& test) {
  Classifier classifier(program);
  ScoredSet scored;
  for (const auto& ex : test.examples()) {
    auto verdict = classifier(ex);
    scored.add(verdict ? Prediction::of(verdict->cls, verdict->confidence) : Prediction::abstain(), ex.label);
  }
  return scored;
}

void verify_export(const Program& program, const Dataset& data) {
  const std::string text = export_program(program);
  auto clauses = parse_clauses(text, program.schema(), program.target());
  std::size_t literals = 0;
  for (const auto& c : clauses) literals += c.literals.size();
  if (literals != program.predicate_count())
    throw Error("exported text has " + std::to_string(literals) + " literals, program counts " +
                std::to_string(program.predicate_count()));

  StratifiedProgram oracle(std::move(clauses));
  Classifier classifier(program);
  for (const auto& ex : data.examples()) {
    auto verdict = classifier(ex);
    auto derived = oracle.derive(ex);
    const bool agree = verdict ? !derived.empty() && derived.front().label == verdict->cls &&
                                     derived.front().confidence == verdict->confidence
                               : derived.empty();
    if (!agree) throw Error("exported program disagrees with classify on example " + ex.id);
  }
}

TrialReport run_trial(const Split& split, const Experiment& experiment, std::size_t trial_id) {
  TrialReport report;
  report.trial_id = trial_id;
  const auto start = std::chrono::steady_clock::now();
  Program program = fit(split.train, experiment);
  report.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ScoredSet scored = score(program, split.test);
  report.accuracy = accuracy(scored);
  report.ibs = ibs(scored);
  report.rule_count = program.size();
  report.predicate_count = program.predicate_count();
  if (experiment.verify_export) verify_export(program, split.test);
  return report;
}

TrialSummary run_trials(const Dataset& data, const Experiment& experiment) {
  if (experiment.trials == 0) throw Error("at least one trial required");
  experiment.learner.validate();

  TrialSummary summary;
  summary.trials.resize(experiment.trials);
  auto one = [&](std::size_t i) {
    const std::uint64_t seed = trial_seed(experiment.seed, i);
    Split split = stratified_split(data, experiment.train_fraction, seed, experiment.stratify_min);
    summary.trials[i] = run_trial(split, experiment, i);
    summary.trials[i].seed = seed;
  };

  const std::size_t jobs = std::clamp<std::size_t>(experiment.jobs, 1, experiment.trials);
  if (jobs == 1) {
    for (std::size_t i = 0; i < experiment.trials; ++i) one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back([&, j] {
        try {
          for (std::size_t i; (i = next++) < experiment.trials;) one(i);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<double> acc, ib, rules, preds, secs;
  for (const auto& t : summary.trials) {
    acc.push_back(t.accuracy);
    ib.push_back(t.ibs);
    rules.push_back(static_cast<double>(t.rule_count));
    preds.push_back(static_cast<double>(t.predicate_count));
    secs.push_back(t.train_seconds);
  }
  summary.accuracy = summarize(acc);
  summary.ibs = summarize(ib);
  summary.rules = summarize(rules);
  summary.predicates = summarize(preds);
  summary.train_seconds = summarize(secs);
  return summary;
}

std::vector<SweepCell> sweep(const Dataset& data, const Experiment& experiment,
                             std::span<const std::pair<double, double>> grid) {
  if (grid.empty()) throw Error("empty sweep grid");
  std::vector<SweepCell> cells;
  for (const auto& [t_imp, t_con] : grid) {
    Experiment cell = experiment;
    cell.learner.improvement_threshold = t_imp;
    cell.learner.confidence_threshold = t_con;
    auto summary = run_trials(data, cell);
    cells.push_back(SweepCell{t_imp, t_con, summary.accuracy.mean, summary.rules.mean, 0.0, cell.trials});
  }
  double base = 0.0;
  auto unpruned = std::find_if(cells.begin(), cells.end(),
                               [](const SweepCell& c) { return c.t_imp == 0.0 && c.t_con == 0.0; });
  if (unpruned != cells.end()) {
    base = unpruned->mean_rule_count;
  } else {
    for (const auto& c : cells) base = std::max(base, c.mean_rule_count);
  }
  for (auto& c : cells) c.normalized_rule_count = base > 0.0 ? c.mean_rule_count / base : 0.0;
  return cells;
}

std::string trials_csv(const TrialSummary& summary, bool timing) {
  std::ostringstream out;
  out << "trial,seed,accuracy,ibs,rules,preds" << (timing ? ",train_seconds" : "") << '\n';
  for (const auto& t : summary.trials) {
    out << t.trial_id << ',' << t.seed << ',' << fixed(t.accuracy, 6) << ',' << fixed(t.ibs, 6) << ','
        << t.rule_count << ',' << t.predicate_count;
    if (timing) out << ',' << fixed(t.train_seconds, 6);
    out << '\n';
  }
  return out.str();
}

std::string trials_table(const TrialSummary& summary, bool timing) {
  auto cell = [](const Stat& s, int digits) { return fixed(s.mean, digits) + " ± " + fixed(s.std, digits); };
  std::ostringstream out;
  out << "trials    " << summary.trials.size() << '\n';
  if (timing) out << "time (s)  " << cell(summary.train_seconds, 3) << '\n';
  out << "accuracy  " << cell(summary.accuracy, 3) << '\n';
  out << "ibs       " << cell(summary.ibs, 3) << '\n';
  out << "rules     " << cell(summary.rules, 1) << '\n';
  out << "preds     " << cell(summary.predicates, 1) << '\n';
  return out.str();
}

std::string sweep_csv(std::span<const SweepCell> cells) {
  std::ostringstream out;
  out << "t_imp,t_con,mean_accuracy,mean_rule_count,normalized_rule_count,trials\n";
  for (const auto& c : cells)
    out << format_number(c.t_imp) << ',' << format_number(c.t_con) << ',' << fixed(c.mean_accuracy, 6) << ','
        << fixed(c.mean_rule_count, 4) << ',' << fixed(c.normalized_rule_count, 6) << ',' << c.trials << '\n';
  return out.str();
}

}  // namespace confold
