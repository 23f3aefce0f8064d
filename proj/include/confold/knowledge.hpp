#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confold/learner.hpp"
#include "confold/model.hpp"

namespace confold {

/// Syntax or admissibility error in rule text, with a 1-based position.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A user-provided rule for one class. Background rules are fixed; initial
/// rules may have their confidence estimated, exceptions pruned, or be
/// dropped altogether.
struct KnowledgeRule {
  AnnotatedRule rule;
  std::string cls;
  bool fixed = false;
  std::optional<double> confidence;
};

/// Parses rule text into clauses, one per disjunct of each statement's
/// body in disjunctive normal form. Target heads are `target(X,label)` or
/// `target(label,X)`; other heads must be unary auxiliary predicates.
std::vector<Clause> parse_clauses(std::string_view text, const Schema& schema, std::string_view target);

/// Parses and normalises rules, one KnowledgeRule per target statement.
/// `not rule_j(X)` references to earlier top-level bodies are dropped since
/// list order already encodes them.
std::vector<KnowledgeRule> parse_rules(std::string_view text, const Schema& schema, std::string_view target,
                                       bool fixed = false);

/// Reads a model file back into a Program. Unannotated rules get confidence 1.
Program parse_program(std::string_view text, const Schema& schema, std::string_view target,
                      std::vector<std::string> classes);

/// Places knowledge rules at the front of the decision list, removes the
/// examples they cover, then learns the remainder.
Program inject(std::span<const KnowledgeRule> knowledge, const Dataset& data, const LearnerConfig& cfg,
               IterationHook hook = {});

}  // namespace confold
