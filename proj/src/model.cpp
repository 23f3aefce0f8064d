#include "confold/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <unordered_set>

namespace confold {

Schema::Schema(std::vector<Feature> features) : features_(std::move(features)) {
  std::unordered_set<std::string> seen;
  for (const auto& f : features_) {
    if (f.name.empty()) throw DataError("empty feature name");
    if (!seen.insert(f.name).second) throw DataError("duplicate feature '" + f.name + "'");
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

Dataset::Dataset(Schema schema, std::vector<Example> examples, std::string label_name)
    : schema_(std::move(schema)), examples_(std::move(examples)), label_name_(std::move(label_name)) {
  std::set<std::string> classes;
  for (const auto& ex : examples_) {
    if (ex.values.size() != schema_.size())
      throw DataError("example '" + ex.id + "' has " + std::to_string(ex.values.size()) +
                      " values, schema has " + std::to_string(schema_.size()));
    for (std::size_t i = 0; i < ex.values.size(); ++i) {
      const auto& v = ex.values[i];
      if (std::holds_alternative<Missing>(v)) continue;
      const bool numeric = schema_[i].kind == FeatureKind::Numeric;
      if (numeric) {
        const double* d = std::get_if<double>(&v);
        if (!d) throw DataError("categorical value in numeric column '" + schema_[i].name + "'");
        if (!std::isfinite(*d)) throw DataError("non-finite value in column '" + schema_[i].name + "'");
      } else if (!std::holds_alternative<std::string>(v)) {
        throw DataError("numeric value in categorical column '" + schema_[i].name + "'");
      }
    }
    classes.insert(ex.label);
  }
  classes_.assign(classes.begin(), classes.end());
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Example> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(examples_.at(i));
  return Dataset(schema_, std::move(picked), label_name_);
}

ExampleRefs refs(const Dataset& data) {
  ExampleRefs out;
  out.reserve(data.size());
  for (const auto& ex : data.examples()) out.push_back(&ex);
  return out;
}

std::string_view to_string(Op op) {
  switch (op) {
    case Op::Eq: return "=";
    case Op::Ne: return "\\=";
    case Op::Le: return "=<";
    case Op::Gt: return ">";
    case Op::Lt: return "<";
    case Op::Ge: return ">=";
  }
  return "?";
}

Op complement(Op op) {
  switch (op) {
    case Op::Eq: return Op::Ne;
    case Op::Ne: return Op::Eq;
    case Op::Le: return Op::Gt;
    case Op::Gt: return Op::Le;
    case Op::Lt: return Op::Ge;
    case Op::Ge: return Op::Lt;
  }
  return op;
}

bool is_order_op(Op op) { return op != Op::Eq && op != Op::Ne; }

Literal make_literal(const Schema& schema, std::string_view feature, Op op, Constant value) {
  auto idx = schema.find(feature);
  if (!idx) throw InvalidLiteral("unknown feature '" + std::string(feature) + "'");
  const bool categorical = schema[*idx].kind == FeatureKind::Categorical;
  if (categorical) {
    if (is_order_op(op))
      throw InvalidLiteral("categorical feature '" + std::string(feature) + "' only admits = and \\=");
    if (!std::holds_alternative<std::string>(value))
      throw InvalidLiteral("numeric constant for categorical feature '" + std::string(feature) + "'");
  } else {
    const double* d = std::get_if<double>(&value);
    if (!d) throw InvalidLiteral("symbolic constant for numeric feature '" + std::string(feature) + "'");
    if (!std::isfinite(*d)) throw InvalidLiteral("non-finite constant for '" + std::string(feature) + "'");
  }
  return Literal{*idx, op, std::move(value)};
}

bool satisfies(const Example& example, const Literal& lit) {
  if (lit.feature >= example.values.size())
    throw InvalidLiteral("literal feature index " + std::to_string(lit.feature) + " outside schema");
  const FeatureValue& v = example.values[lit.feature];
  if (const auto* sym = std::get_if<std::string>(&lit.value)) {
    if (is_order_op(lit.op)) throw InvalidLiteral("order comparison on categorical constant '" + *sym + "'");
    const auto* have = std::get_if<std::string>(&v);
    if (!have) return false;
    return (*have == *sym) == (lit.op == Op::Eq);
  }
  const double c = std::get<double>(lit.value);
  const auto* x = std::get_if<double>(&v);
  if (!x) return false;
  switch (lit.op) {
    case Op::Eq: return *x == c;
    case Op::Ne: return *x != c;
    case Op::Le: return *x <= c;
    case Op::Gt: return *x > c;
    case Op::Lt: return *x < c;
    case Op::Ge: return *x >= c;
  }
  return false;
}

RuleIndex::RuleIndex(std::span<const Rule> rules) {
  for (const auto& r : rules) by_head_[r.head].push_back(&r);
}

const std::vector<const Rule*>& RuleIndex::lookup(const std::string& head) const {
  auto it = by_head_.find(head);
  if (it == by_head_.end()) throw MalformedProgram("undefined auxiliary predicate '" + head + "'");
  return it->second;
}

bool symbol_fires(const std::string& head, const RuleIndex& aux, const Example& example) {
  for (const Rule* r : aux.lookup(head))
    if (fires(*r, aux, example)) return true;
  return false;
}

bool fires(const Rule& rule, const RuleIndex& aux, const Example& example) {
  for (const auto& lit : rule.body)
    if (!satisfies(example, lit)) return false;
  for (const auto& c : rule.calls)
    if (!symbol_fires(c, aux, example)) return false;
  for (const auto& e : rule.exceptions)
    if (symbol_fires(e, aux, example)) return false;
  return true;
}

bool fires(const Rule& rule, std::span<const Rule> aux, const Example& example) {
  return fires(rule, RuleIndex(aux), example);
}

std::vector<Rule> reachable(std::span<const Rule> pool, std::span<const std::string> roots) {
  std::vector<Rule> out;
  std::unordered_set<std::string> seen;
  std::function<void(const std::string&)> visit = [&](const std::string& head) {
    if (!seen.insert(head).second) return;
    bool found = false;
    for (const auto& r : pool) {
      if (r.head != head) continue;
      found = true;
      out.push_back(r);
      for (const auto& c : r.calls) visit(c);
      for (const auto& e : r.exceptions) visit(e);
    }
    if (!found) throw MalformedProgram("undefined auxiliary predicate '" + head + "'");
  };
  for (const auto& root : roots) visit(root);
  return out;
}

void check_stratified(std::span<const Rule> rules, std::span<const std::string> roots) {
  RuleIndex index(rules);
  enum class Mark { Fresh, Active, Done };
  std::unordered_map<std::string, Mark> marks;
  std::function<void(const std::string&)> visit = [&](const std::string& head) {
    auto& m = marks[head];
    if (m == Mark::Done) return;
    if (m == Mark::Active) throw MalformedProgram("not stratified: cyclic reference through '" + head + "'");
    m = Mark::Active;
    for (const Rule* r : index.lookup(head)) {
      for (const auto& c : r->calls) visit(c);
      for (const auto& e : r->exceptions) visit(e);
    }
    marks[head] = Mark::Done;
  };
  for (const auto& root : roots) visit(root);
  for (const auto& r : rules) visit(r.head);
}

Program::Program(Schema schema, std::string target, std::vector<std::string> classes,
                 std::vector<AnnotatedRule> rules)
    : schema_(std::move(schema)), target_(std::move(target)), classes_(std::move(classes)),
      rules_(std::move(rules)) {
  std::unordered_map<std::string, std::size_t> owner;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& ar = rules_[i];
    if (ar.rule.calls.size() != 1 || !ar.rule.body.empty() || !ar.rule.exceptions.empty())
      throw MalformedProgram("top-level rule " + std::to_string(i + 1) + " must call exactly one body symbol");
    if (ar.rule.head != ar.cls)
      throw MalformedProgram("top-level rule head '" + ar.rule.head + "' differs from class '" + ar.cls + "'");
    if (!(ar.confidence >= 0.0 && ar.confidence <= 1.0))
      throw MalformedProgram("confidence outside [0,1] on rule " + std::to_string(i + 1));
    for (const auto& aux : ar.aux) {
      auto [it, inserted] = owner.emplace(aux.head, i);
      if (!inserted && it->second != i)
        throw MalformedProgram("auxiliary predicate '" + aux.head + "' defined by two top-level rules");
      for (const auto& lit : aux.body) {
        if (lit.feature >= schema_.size()) throw MalformedProgram("literal outside schema in '" + aux.head + "'");
      }
    }
    check_stratified(ar.aux, ar.rule.calls);
  }
}

std::size_t Program::predicate_count() const {
  std::size_t n = 0;
  for (const auto& ar : rules_)
    for (const auto& aux : ar.aux) n += aux.body.size();
  return n;
}

Classifier::Classifier(const Program& program) : program_(&program) {
  indices_.reserve(program.size());
  for (const auto& ar : program.rules()) indices_.emplace_back(ar.aux);
}

std::optional<Verdict> Classifier::operator()(const Example& example) const {
  const auto rules = program_->rules();
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (fires(rules[i].rule, indices_[i], example))
      return Verdict{rules[i].cls, rules[i].confidence, i};
  }
  return std::nullopt;
}

std::optional<Verdict> classify(const Program& program, const Example& example) {
  return Classifier(program)(example);
}

std::vector<Clause> to_clauses(const Program& program) {
  std::vector<Clause> out;
  std::vector<std::string> earlier;
  for (const auto& ar : program.rules()) {
    Clause c;
    c.head = program.target();
    c.label = ar.cls;
    c.confidence = ar.confidence;
    c.positive = ar.rule.calls;
    c.negative = earlier;
    out.push_back(std::move(c));
    earlier.push_back(ar.rule.calls.front());
  }
  for (const auto& ar : program.rules()) {
    for (auto& aux : reachable(ar.aux, ar.rule.calls)) {
      Clause c;
      c.head = std::move(aux.head);
      c.positive = std::move(aux.calls);
      c.literals = std::move(aux.body);
      c.negative = std::move(aux.exceptions);
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, end);
}

namespace {

bool is_number_text(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = 0;
  if (s[0] == '-') ++i;
  const std::size_t digits_start = i;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == digits_start) return false;
  if (i < s.size() && s[i] == '.') {
    ++i;
    const std::size_t frac = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == frac) return false;
  }
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    const std::size_t exp = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == exp) return false;
  }
  return i == s.size();
}

bool is_bare_atom(std::string_view s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  for (char ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') return false;
  return s != "not";
}

}  // namespace

std::string quote_atom(std::string_view text) {
  if (is_bare_atom(text) || is_number_text(text)) return std::string(text);
  std::string out = "'";
  for (char ch : text) {
    if (ch == '\'' || ch == '\\') out += '\\';
    out += ch;
  }
  out += '\'';
  return out;
}

std::string render_literal(const Schema& schema, const Literal& lit, int variable) {
  const std::string name = quote_atom(schema[lit.feature].name);
  if (const auto* sym = std::get_if<std::string>(&lit.value)) {
    std::string atom = name + "(X," + quote_atom(*sym) + ")";
    return lit.op == Op::Eq ? atom : "not " + atom;
  }
  const std::string var = "N" + std::to_string(variable);
  return name + "(X," + var + "), " + var + std::string(to_string(lit.op)) +
         format_number(std::get<double>(lit.value));
}

std::string render_clause(const Schema& schema, const Clause& clause) {
  std::string out;
  if (clause.label) {
    if (clause.confidence) out += format_number(*clause.confidence) + "::";
    out += quote_atom(clause.head) + "(X," + quote_atom(*clause.label) + ")";
  } else {
    out += quote_atom(clause.head) + "(X)";
  }
  std::vector<std::string> parts;
  for (const auto& p : clause.positive) parts.push_back(quote_atom(p) + "(X)");
  int variable = 0;
  for (const auto& lit : clause.literals) {
    if (std::holds_alternative<double>(lit.value)) ++variable;
    parts.push_back(render_literal(schema, lit, variable));
  }
  for (const auto& n : clause.negative) parts.push_back("not " + quote_atom(n) + "(X)");
  out += " :- ";
  if (parts.empty()) out += "true";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  out += '.';
  return out;
}

std::string render_clauses(const Schema& schema, std::span<const Clause> clauses) {
  std::string out;
  for (const auto& c : clauses) {
    out += render_clause(schema, c);
    out += '\n';
  }
  return out;
}

std::string export_program(const Program& program) {
  return render_clauses(program.schema(), to_clauses(program));
}

StratifiedProgram::StratifiedProgram(std::vector<Clause> clauses) : clauses_(std::move(clauses)) {
  for (std::size_t i = 0; i < clauses_.size(); ++i)
    if (!clauses_[i].label) defs_[clauses_[i].head].push_back(i);

  enum class Mark { Fresh, Active, Done };
  std::unordered_map<std::string, Mark> marks;
  std::function<void(const std::string&)> visit = [&](const std::string& head) {
    auto it = defs_.find(head);
    if (it == defs_.end()) throw MalformedProgram("undefined predicate '" + head + "'");
    auto& m = marks[head];
    if (m == Mark::Done) return;
    if (m == Mark::Active) throw MalformedProgram("program is not stratified at '" + head + "'");
    m = Mark::Active;
    for (auto ci : it->second) {
      for (const auto& p : clauses_[ci].positive) visit(p);
      for (const auto& n : clauses_[ci].negative) visit(n);
    }
    marks[head] = Mark::Done;
    slot_[head] = order_.size();
    order_.push_back(head);
  };
  for (const auto& c : clauses_) {
    if (c.label) {
      for (const auto& p : c.positive) visit(p);
      for (const auto& n : c.negative) visit(n);
    } else {
      visit(c.head);
    }
  }
}

std::vector<Derivation> StratifiedProgram::derive(const Example& example) const {
  std::vector<char> truth(order_.size(), 0);
  auto body_holds = [&](const Clause& c) {
    for (const auto& p : c.positive)
      if (!truth[slot_.at(p)]) return false;
    for (const auto& lit : c.literals)
      if (!satisfies(example, lit)) return false;
    for (const auto& n : c.negative)
      if (truth[slot_.at(n)]) return false;
    return true;
  };
  // Each predicate only depends on earlier slots, so one pass reaches the fixpoint.
  for (std::size_t s = 0; s < order_.size(); ++s) {
    for (auto ci : defs_.at(order_[s])) {
      if (body_holds(clauses_[ci])) {
        truth[s] = 1;
        break;
      }
    }
  }
  std::vector<Derivation> out;
  for (const auto& c : clauses_)
    if (c.label && body_holds(c)) out.push_back(Derivation{*c.label, c.confidence});
  return out;
}

}  // namespace confold
