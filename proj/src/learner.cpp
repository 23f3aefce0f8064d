#include "confold/learner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "confold/pruning.hpp"

namespace confold {

void LearnerConfig::validate() const {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error("ratio must lie in [0,1]");
  if (!(improvement_threshold >= 0.0)) throw Error("improvement threshold must be >= 0");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0))
    throw Error("confidence threshold must lie in [0,1]");
  if (!(z > 0.0) || !std::isfinite(z)) throw Error("z must be > 0");
}

std::string most(std::span<const Example* const> examples) {
  if (examples.empty()) throw Error("most() on an empty example set");
  std::map<std::string, std::size_t> counts;
  for (const auto* ex : examples) ++counts[ex->label];
  // std::map iterates in lexicographic order, so the first maximum wins ties.
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

std::string most(const Dataset& data) { return most(refs(data)); }

std::pair<ExampleRefs, ExampleRefs> split_by_literal(std::span<const Example* const> examples,
                                                     const std::string& label) {
  std::pair<ExampleRefs, ExampleRefs> out;
  for (const auto* ex : examples) (ex->label == label ? out.first : out.second).push_back(ex);
  return out;
}

namespace {

double entropy(double p, double n) {
  if (p <= 0.0 || n <= 0.0) return 0.0;
  const double t = p + n;
  return -(p / t) * std::log2(p / t) - (n / t) * std::log2(n / t);
}

constexpr double kGainTolerance = 1e-12;

struct Candidate {
  Literal lit;
  std::size_t tp = 0;
  double gain = 0.0;
};

int compare_constants(const Constant& a, const Constant& b) {
  if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
  if (const auto* s = std::get_if<std::string>(&a)) {
    const auto& t = std::get<std::string>(b);
    return *s < t ? -1 : (t < *s ? 1 : 0);
  }
  const double x = std::get<double>(a), y = std::get<double>(b);
  return x < y ? -1 : (y < x ? 1 : 0);
}

bool better(const Candidate& a, const Candidate& b) {
  if (a.gain > b.gain + kGainTolerance) return true;
  if (b.gain > a.gain + kGainTolerance) return false;
  if (a.tp != b.tp) return a.tp > b.tp;
  if (a.lit.feature != b.lit.feature) return a.lit.feature < b.lit.feature;
  if (a.lit.op != b.lit.op) return a.lit.op < b.lit.op;
  return compare_constants(a.lit.value, b.lit.value) < 0;
}

ExampleRefs covered_by(std::span<const Example* const> examples, const Literal& lit) {
  ExampleRefs out;
  for (const auto* ex : examples)
    if (satisfies(*ex, lit)) out.push_back(ex);
  return out;
}

// Rule body under construction; exceptions nest as a tree until flattened.
struct Node {
  std::vector<Literal> literals;
  std::vector<Node> exceptions;
};

bool node_fires(const Node& node, const Example& ex) {
  for (const auto& lit : node.literals)
    if (!satisfies(ex, lit)) return false;
  for (const auto& e : node.exceptions)
    if (node_fires(e, ex)) return false;
  return true;
}

Node grow(const Schema& schema, std::span<const Example* const> pos, std::span<const Example* const> neg,
          std::vector<Literal> used, const LearnerConfig& cfg, std::size_t depth) {
  Node node;
  ExampleRefs p(pos.begin(), pos.end());
  ExampleRefs n(neg.begin(), neg.end());
  while (true) {
    auto lit = best_literal(schema, p, n, used);
    if (!lit) break;
    p = covered_by(p, *lit);
    n = covered_by(n, *lit);
    node.literals.push_back(*lit);
    used.push_back(std::move(*lit));
    if (static_cast<double>(n.size()) <= cfg.ratio * static_cast<double>(p.size())) break;
  }
  if (n.empty() || (cfg.max_exception_depth && depth >= *cfg.max_exception_depth)) return node;
  // An exception with an empty body is discarded by the caller; recursing
  // would just swap the two sets forever.
  if (depth > 0 && node.literals.empty()) return node;

  // Exceptions: sequential covering of the covered negatives against the
  // covered positives.
  ExampleRefs remaining = std::move(n);
  while (!remaining.empty()) {
    Node child = grow(schema, remaining, p, used, cfg, depth + 1);
    // An exception without literals would block the whole rule.
    if (child.literals.empty()) break;
    ExampleRefs rest;
    for (const auto* ex : remaining)
      if (!node_fires(child, *ex)) rest.push_back(ex);
    if (rest.size() == remaining.size()) break;
    node.exceptions.push_back(std::move(child));
    remaining = std::move(rest);
  }
  return node;
}

void flatten(const Node& node, const std::string& head, RuleNamer& namer, std::vector<Rule>& out) {
  const std::size_t slot = out.size();
  out.push_back(Rule{head, node.literals, {}, {}});
  for (const auto& child : node.exceptions) {
    std::string name = namer.next_ab();
    out[slot].exceptions.push_back(name);
    flatten(child, name, namer, out);
  }
}

std::optional<std::size_t> numbered(std::string_view head, std::string_view prefix) {
  if (!head.starts_with(prefix) || head.size() == prefix.size()) return std::nullopt;
  std::size_t value = 0;
  const char* first = head.data() + prefix.size();
  const char* last = head.data() + head.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

}  // namespace

double information_gain(const SplitCounts& c) {
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  const double total = tp + fp + tn + fn;
  if (total <= 0.0) throw Error("information gain of empty split");
  const double before = entropy(tp + fn, fp + tn);
  const double after = (tp + fp) / total * entropy(tp, fp) + (fn + tn) / total * entropy(fn, tn);
  return before - after;
}

std::optional<Literal> best_literal(const Schema& schema, std::span<const Example* const> pos,
                                    std::span<const Example* const> neg, std::span<const Literal> excluded) {
  const std::size_t total_pos = pos.size(), total_neg = neg.size();
  if (total_pos == 0) return std::nullopt;
  std::optional<Candidate> best;

  auto consider = [&](Literal lit, std::size_t tp, std::size_t fp) {
    if (tp == 0) return;
    if (std::find(excluded.begin(), excluded.end(), lit) != excluded.end()) return;
    const double gain = information_gain({tp, fp, total_neg - fp, total_pos - tp});
    if (gain <= kGainTolerance) return;
    Candidate cand{std::move(lit), tp, gain};
    if (!best || better(cand, *best)) best = std::move(cand);
  };

  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (schema[f].kind == FeatureKind::Categorical) {
      std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
      std::size_t present_pos = 0, present_neg = 0;
      for (const auto* ex : pos)
        if (const auto* s = std::get_if<std::string>(&ex->values[f])) ++counts[*s].first, ++present_pos;
      for (const auto* ex : neg)
        if (const auto* s = std::get_if<std::string>(&ex->values[f])) ++counts[*s].second, ++present_neg;
      for (const auto& [value, pn] : counts) {
        consider(Literal{f, Op::Eq, value}, pn.first, pn.second);
        consider(Literal{f, Op::Ne, value}, present_pos - pn.first, present_neg - pn.second);
      }
    } else {
      // Prefix sums over the sorted observed values.
      std::vector<std::pair<double, bool>> values;
      values.reserve(total_pos + total_neg);
      for (const auto* ex : pos)
        if (const auto* d = std::get_if<double>(&ex->values[f])) values.emplace_back(*d, true);
      for (const auto* ex : neg)
        if (const auto* d = std::get_if<double>(&ex->values[f])) values.emplace_back(*d, false);
      std::sort(values.begin(), values.end());
      std::size_t present_pos = 0;
      for (const auto& v : values) present_pos += v.second;
      const std::size_t present_neg = values.size() - present_pos;
      std::size_t le_pos = 0, le_neg = 0;
      for (std::size_t i = 0; i < values.size();) {
        const double v = values[i].first;
        for (; i < values.size() && values[i].first == v; ++i) (values[i].second ? le_pos : le_neg)++;
        consider(Literal{f, Op::Le, v}, le_pos, le_neg);
        consider(Literal{f, Op::Gt, v}, present_pos - le_pos, present_neg - le_neg);
      }
    }
  }
  if (!best) return std::nullopt;
  return std::move(best->lit);
}

void RuleNamer::reserve(std::span<const Rule> rules) {
  for (const auto& r : rules) {
    if (auto n = numbered(r.head, "rule")) rules_ = std::max(rules_, *n);
    if (auto n = numbered(r.head, "ab")) abs_ = std::max(abs_, *n);
    for (const auto& e : r.exceptions)
      if (auto n = numbered(e, "ab")) abs_ = std::max(abs_, *n);
  }
}

LearnedRule learn_rule(const Schema& schema, const std::string& cls, std::span<const Example* const> pos,
                       std::span<const Example* const> neg, const LearnerConfig& cfg, RuleNamer& namer) {
  if (pos.empty()) throw Error("learn_rule needs at least one positive example");
  Node root = grow(schema, pos, neg, {}, cfg, 0);
  LearnedRule out;
  const std::string body = namer.next_rule();
  out.rule = Rule{cls, {}, {body}, {}};
  flatten(root, body, namer, out.aux);
  return out;
}

double conf(const Rule& r, std::span<const Rule> aux, std::span<const Example* const> pos,
            std::span<const Example* const> neg, double z) {
  const RuleIndex index(aux);
  std::size_t n_p = 0, n_n = 0;
  for (const auto* ex : pos) n_p += fires(r, index, *ex);
  for (const auto* ex : neg) n_n += fires(r, index, *ex);
  return wilson(n_p, n_p + n_n, z);
}

Trainer::Trainer(const Dataset& data, const LearnerConfig& cfg, IterationHook hook)
    : data_(data), cfg_(cfg), hook_(std::move(hook)), worklist_(refs(data)) {
  cfg_.validate();
}

std::size_t Trainer::consume(const Rule& r, std::span<const Rule> aux, const std::string& cls,
                             ExampleRefs& pos, ExampleRefs& neg) {
  auto split = split_by_literal(worklist_, cls);
  pos = std::move(split.first);
  neg = std::move(split.second);
  const RuleIndex index(aux);
  ExampleRefs rest;
  std::size_t covered_pos = 0;
  for (const auto* ex : worklist_) {
    if (fires(r, index, *ex))
      covered_pos += ex->label == cls;
    else
      rest.push_back(ex);
  }
  worklist_ = std::move(rest);
  return covered_pos;
}

void Trainer::add_rule(AnnotatedRule rule, bool prunable, bool has_confidence) {
  namer_.reserve(rule.aux);
  auto [pos, neg] = split_by_literal(worklist_, rule.cls);
  if (prunable && cfg_.improvement_threshold > 0.0)
    rule.aux = evaluate_exceptions(rule.rule, std::move(rule.aux), pos, neg, cfg_.improvement_threshold, cfg_.z);
  if (!has_confidence) rule.confidence = prunable ? conf(rule.rule, rule.aux, pos, neg, cfg_.z) : 1.0;
  rule.fixed = !prunable;

  IterationTrace trace;
  trace.iteration = ++iteration_;
  trace.cls = rule.cls;
  trace.worklist_before = worklist_.size();
  trace.positives_covered = consume(rule.rule, rule.aux, rule.cls, pos, neg);
  trace.worklist_after = worklist_.size();
  trace.confidence = rule.confidence;
  trace.kept = !prunable || cfg_.confidence_post_pass || rule.confidence >= cfg_.confidence_threshold;
  if (trace.kept) rules_.push_back(std::move(rule));
  if (hook_) hook_(trace);
}

void Trainer::learn() {
  while (!worklist_.empty()) {
    const std::string cls = most(worklist_);
    auto [pos, neg] = split_by_literal(worklist_, cls);
    LearnedRule learned = learn_rule(data_.schema(), cls, pos, neg, cfg_, namer_);
    if (cfg_.improvement_threshold > 0.0)
      learned.aux = evaluate_exceptions(learned.rule, std::move(learned.aux), pos, neg,
                                        cfg_.improvement_threshold, cfg_.z);

    IterationTrace trace;
    trace.iteration = ++iteration_;
    trace.cls = cls;
    trace.worklist_before = worklist_.size();

    const RuleIndex index(learned.aux);
    std::size_t covered_pos = 0;
    for (const auto* ex : pos) covered_pos += fires(learned.rule, index, *ex);
    if (covered_pos == 0) {
      trace.worklist_after = worklist_.size();
      trace.stopped = true;
      if (hook_) hook_(trace);
      break;
    }
    // X <- X_fn u X_tn: everything the rule covers leaves the worklist.
    ExampleRefs rest;
    for (const auto* ex : worklist_)
      if (!fires(learned.rule, index, *ex)) rest.push_back(ex);
    worklist_ = std::move(rest);

    const double c = conf(learned.rule, learned.aux, pos, neg, cfg_.z);
    trace.worklist_after = worklist_.size();
    trace.positives_covered = covered_pos;
    trace.confidence = c;
    trace.kept = cfg_.confidence_post_pass || c >= cfg_.confidence_threshold;
    if (trace.kept) rules_.push_back(AnnotatedRule{std::move(learned.rule), std::move(learned.aux), c, cls, false});
    if (hook_) hook_(trace);
  }
}

Program Trainer::finish() && {
  Program program(data_.schema(), data_.label_name(), data_.classes(), std::move(rules_));
  if (cfg_.confidence_post_pass) return confidence_filter(program, cfg_.confidence_threshold);
  return program;
}

Program confold(const Dataset& data, const LearnerConfig& cfg, IterationHook hook) {
  if (data.empty()) throw Error("confold on an empty dataset");
  Trainer trainer(data, cfg, std::move(hook));
  trainer.learn();
  return std::move(trainer).finish();
}

}  // namespace confold
