#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace confold {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A literal that cannot be evaluated (order operator on a categorical value,
// feature index outside the schema).
class InvalidLiteral : public Error {
 public:
  using Error::Error;
};

// Dangling references, duplicate auxiliary symbols or cyclic negation.
class MalformedProgram : public Error {
 public:
  using Error::Error;
};

// Ingestion and schema errors.
class DataError : public Error {
 public:
  using Error::Error;
};

struct Missing {
  bool operator==(const Missing&) const = default;
};

using FeatureValue = std::variant<Missing, std::string, double>;

// Literal constants are never Missing.
using Constant = std::variant<std::string, double>;

enum class FeatureKind { Categorical, Numeric };

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::Categorical;

  bool operator==(const Feature&) const = default;
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Feature> features);

  std::span<const Feature> features() const { return features_; }
  std::size_t size() const { return features_.size(); }
  const Feature& operator[](std::size_t i) const { return features_[i]; }

  std::optional<std::size_t> find(std::string_view name) const;

  bool operator==(const Schema& other) const { return features_ == other.features_; }

 private:
  std::vector<Feature> features_;
};

struct Example {
  std::string id;
  std::vector<FeatureValue> values;  // parallel to the schema
  std::string label;
};

/// Tabular training data. Construction checks every example against the
/// schema: one value per feature, numeric columns hold finite doubles or
/// Missing, categorical columns hold strings or Missing.
class Dataset {
 public:
  Dataset(Schema schema, std::vector<Example> examples, std::string label_name = "class");

  const Schema& schema() const { return schema_; }
  std::span<const Example> examples() const { return examples_; }
  const Example& operator[](std::size_t i) const { return examples_[i]; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }

  /// Name of the label column; doubles as the target predicate symbol.
  const std::string& label_name() const { return label_name_; }

  /// Distinct labels, sorted.
  const std::vector<std::string>& classes() const { return classes_; }

  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  Schema schema_;
  std::vector<Example> examples_;
  std::string label_name_;
  std::vector<std::string> classes_;
};

using ExampleRefs = std::vector<const Example*>;

ExampleRefs refs(const Dataset& data);

enum class Op { Eq, Ne, Le, Gt, Lt, Ge };

std::string_view to_string(Op op);
Op complement(Op op);
bool is_order_op(Op op);

struct Literal {
  std::size_t feature = 0;
  Op op = Op::Eq;
  Constant value;

  bool operator==(const Literal&) const = default;
};

/// Builds a literal against the schema. Categorical features only admit
/// = and !=, and the constant type has to match the feature kind.
Literal make_literal(const Schema& schema, std::string_view feature, Op op, Constant value);

/// True iff the example's value is present, has the literal's type and the
/// comparison holds. Missing never satisfies, not even !=.
bool satisfies(const Example& example, const Literal& lit);

struct Rule {
  std::string head;
  std::vector<Literal> body;
  std::vector<std::string> calls;       // positive references to auxiliary rules
  std::vector<std::string> exceptions;  // referenced under default negation

  bool operator==(const Rule&) const = default;
};

/// Head symbol -> defining rules. Several rules sharing a head act as a
/// disjunction. Holds pointers into the span it was built from.
class RuleIndex {
 public:
  explicit RuleIndex(std::span<const Rule> rules);

  // Throws MalformedProgram for undefined symbols.
  const std::vector<const Rule*>& lookup(const std::string& head) const;
  bool contains(const std::string& head) const { return by_head_.contains(head); }

 private:
  std::unordered_map<std::string, std::vector<const Rule*>> by_head_;
};

bool fires(const Rule& rule, const RuleIndex& aux, const Example& example);
bool fires(const Rule& rule, std::span<const Rule> aux, const Example& example);
bool symbol_fires(const std::string& head, const RuleIndex& aux, const Example& example);

/// A top-level rule of the decision list. `rule.head` is the class label and
/// `rule.calls` names the auxiliary rule holding the body.
struct AnnotatedRule {
  Rule rule;
  std::vector<Rule> aux;
  double confidence = 0.0;
  std::string cls;
  bool fixed = false;  // background knowledge, exempt from pruning

  bool operator==(const AnnotatedRule&) const = default;
};

/// Auxiliary rules reachable from `root` through calls and exceptions, in
/// depth-first pre-order. Throws MalformedProgram on dangling references.
std::vector<Rule> reachable(std::span<const Rule> pool, std::span<const std::string> roots);

/// Ordered, annotated decision list. Construction checks that auxiliary
/// symbols are unique across rules, every reference resolves, and the
/// reference graph is acyclic.
class Program {
 public:
  Program(Schema schema, std::string target, std::vector<std::string> classes,
          std::vector<AnnotatedRule> rules = {});

  const Schema& schema() const { return schema_; }
  const std::string& target() const { return target_; }
  const std::vector<std::string>& classes() const { return classes_; }
  std::span<const AnnotatedRule> rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  /// Feature literal occurrences over all auxiliary rules.
  std::size_t predicate_count() const;

 private:
  Schema schema_;
  std::string target_;
  std::vector<std::string> classes_;
  std::vector<AnnotatedRule> rules_;
};

void check_stratified(std::span<const Rule> rules, std::span<const std::string> roots);

struct Verdict {
  std::string cls;
  double confidence = 0.0;
  std::size_t rule_index = 0;
};

/// Precompiled first-match evaluation of a Program.
class Classifier {
 public:
  explicit Classifier(const Program& program);

  std::optional<Verdict> operator()(const Example& example) const;

 private:
  const Program* program_;
  std::vector<RuleIndex> indices_;
};

std::optional<Verdict> classify(const Program& program, const Example& example);

// ---------------------------------------------------------------------------
// Clause level: the emitted logic program and its bottom-up semantics.

struct Clause {
  std::string head;                  // predicate symbol
  std::optional<std::string> label;  // set for target atoms head(X,label)
  std::optional<double> confidence;
  std::vector<std::string> positive;
  std::vector<Literal> literals;
  std::vector<std::string> negative;

  bool operator==(const Clause&) const = default;
};

/// Lowers a program to clauses. Each later target clause carries
/// `not rule_j(X)` for every earlier top-level body symbol.
std::vector<Clause> to_clauses(const Program& program);

std::string render_clause(const Schema& schema, const Clause& clause);
std::string render_clauses(const Schema& schema, std::span<const Clause> clauses);

/// Model file text: one "."-terminated clause per line.
std::string export_program(const Program& program);

/// Text form of a single literal, e.g. `sex(X,female)` or `age(X,N1), N1>16`.
std::string render_literal(const Schema& schema, const Literal& lit, int variable);

/// Quotes a constant or predicate symbol unless it is a bare lowercase atom
/// or a number.
std::string quote_atom(std::string_view text);
std::string format_number(double value);

struct Derivation {
  std::string label;
  std::optional<double> confidence;
};

/// Perfect model of an acyclic clause set over one example's feature atoms,
/// computed predicate by predicate in dependency order.
class StratifiedProgram {
 public:
  explicit StratifiedProgram(std::vector<Clause> clauses);

  /// Target atoms derived for the example, in clause order.
  std::vector<Derivation> derive(const Example& example) const;

  std::span<const Clause> clauses() const { return clauses_; }

 private:
  std::vector<Clause> clauses_;
  std::vector<std::string> order_;  // auxiliary predicates, dependencies first
  std::unordered_map<std::string, std::size_t> slot_;
  std::unordered_map<std::string, std::vector<std::size_t>> defs_;
};

}  // namespace confold
