#include "confold/knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace confold {

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Name, Var, Number, Quoted, LParen, RParen, Comma, Semicolon, Dot, Neck, Prob, Not, Cmp, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.kind = Tok::Number;
        t.text = number();
      } else if (std::islower(static_cast<unsigned char>(c))) {
        t.text = identifier();
        t.kind = t.text == "not" ? Tok::Not : Tok::Name;
      } else if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Var;
        t.text = identifier();
      } else if (c == '\'') {
        t.kind = Tok::Quoted;
        t.text = quoted();
      } else if (starts("\\+")) {
        t.kind = Tok::Not;
        t.text = advance(2);
      } else if (starts(":-")) {
        t.kind = Tok::Neck;
        t.text = advance(2);
      } else if (starts("::")) {
        t.kind = Tok::Prob;
        t.text = advance(2);
      } else if (auto op = comparison()) {
        t.kind = Tok::Cmp;
        t.text = advance(op);
      } else if (c == '(' || c == ')' || c == ',' || c == ';' || c == '.') {
        t.kind = c == '(' ? Tok::LParen : c == ')' ? Tok::RParen : c == ',' ? Tok::Comma
                 : c == ';' ? Tok::Semicolon : Tok::Dot;
        t.text = advance(1);
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  bool starts(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  std::size_t comparison() const {
    for (std::string_view op : {"=:=", "=\\=", "\\==", ">=", "=<", "<=", "==", "\\=", "!=", ">", "<", "="})
      if (starts(op)) return op.size();
    return 0;
  }

  std::string advance(std::size_t n) {
    std::string out(src_.substr(pos_, n));
    for (std::size_t i = 0; i < n; ++i) bump();
    return out;
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (starts("/*")) {
        const std::size_t line = line_, col = col_;
        while (pos_ < src_.size() && !starts("*/")) bump();
        if (pos_ >= src_.size()) throw ParseError("unterminated comment", line, col);
        advance(2);
      } else {
        return;
      }
    }
  }

  std::string identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) bump();
    return std::string(src_.substr(start, pos_ - start));
  }

  bool digit_at(std::size_t i) const {
    return i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]));
  }

  std::string number() {
    std::size_t start = pos_;
    if (src_[pos_] == '-') bump();
    while (digit_at(pos_)) bump();
    if (pos_ < src_.size() && src_[pos_] == '.' && digit_at(pos_ + 1)) {
      bump();
      while (digit_at(pos_)) bump();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (digit_at(look)) {
        while (pos_ < look) bump();
        while (digit_at(pos_)) bump();
      }
    }
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string quoted() {
    const std::size_t line = line_, col = col_;
    bump();
    std::string out;
    while (true) {
      if (pos_ >= src_.size()) throw ParseError("unterminated quoted atom", line, col);
      char c = src_[pos_];
      if (c == '\'') {
        bump();
        if (pos_ < src_.size() && src_[pos_] == '\'') {  // '' escape
          out += '\'';
          bump();
          continue;
        }
        return out;
      }
      if (c == '\\' && pos_ + 1 < src_.size()) {
        bump();
        c = src_[pos_];
      }
      out += c;
      bump();
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

// ---------------------------------------------------------------------------
// Syntax tree

struct Term {
  enum Kind { Var, Const, Number } kind = Const;
  std::string text;
  std::size_t line = 0, column = 0;
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  enum Kind { And, Or, Not, True, Atom, Compare } kind = True;
  std::vector<ExprPtr> children;
  std::string name;         // Atom: predicate; Compare: operator
  std::vector<Term> args;   // Atom arguments, or Compare lhs/rhs
  std::size_t line = 0, column = 0;
};

struct Statement {
  std::optional<double> confidence;
  std::string head;
  std::vector<Term> head_args;
  ExprPtr body;  // null for facts
  std::size_t line = 0, column = 0;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  std::vector<Statement> run() {
    std::vector<Statement> out;
    while (peek().kind != Tok::End) out.push_back(statement());
    return out;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }
  const Token& take() { return toks_[std::min(i_++, toks_.size() - 1)]; }

  [[noreturn]] void fail(const std::string& what, const Token& at) const {
    std::string found = at.kind == Tok::End ? "end of input" : "'" + at.text + "'";
    throw ParseError(what + ", found " + found, at.line, at.column);
  }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(std::string("expected ") + what, peek());
    return take();
  }

  bool is_name_token(const Token& t) const { return t.kind == Tok::Name || t.kind == Tok::Quoted; }

  Statement statement() {
    Statement st;
    st.line = peek().line;
    st.column = peek().column;
    if (peek().kind == Tok::Number && peek(1).kind == Tok::Prob) {
      const Token& num = take();
      double p = 0.0;
      auto [ptr, ec] = std::from_chars(num.text.data(), num.text.data() + num.text.size(), p);
      if (ec != std::errc() || ptr != num.text.data() + num.text.size() || !(p >= 0.0 && p <= 1.0))
        throw ParseError("confidence must be a number in [0,1]", num.line, num.column);
      st.confidence = p;
      take();
    }
    if (!is_name_token(peek())) fail("expected rule head", peek());
    st.head = take().text;
    expect(Tok::LParen, "'(' after head predicate");
    st.head_args = arguments();
    if (peek().kind == Tok::Neck) {
      take();
      st.body = disjunction();
    }
    expect(Tok::Dot, "'.' at end of rule");
    return st;
  }

  std::vector<Term> arguments() {
    std::vector<Term> args;
    while (true) {
      args.push_back(term());
      if (peek().kind == Tok::Comma) {
        take();
        continue;
      }
      expect(Tok::RParen, "')' or ','");
      return args;
    }
  }

  Term term() {
    const Token& t = peek();
    Term out;
    out.line = t.line;
    out.column = t.column;
    out.text = t.text;
    switch (t.kind) {
      case Tok::Var: out.kind = Term::Var; break;
      case Tok::Number: out.kind = Term::Number; break;
      case Tok::Name:
      case Tok::Quoted: out.kind = Term::Const; break;
      default: fail("expected a term", t);
    }
    take();
    return out;
  }

  ExprPtr node(Expr::Kind kind, const Token& at) {
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->line = at.line;
    e->column = at.column;
    return e;
  }

  bool at_keyword(const char* word) const { return peek().kind == Tok::Name && peek().text == word; }

  ExprPtr disjunction() {
    const Token& start = peek();
    std::vector<ExprPtr> parts;
    parts.push_back(conjunction());
    while (peek().kind == Tok::Semicolon || at_keyword("or")) {
      take();
      parts.push_back(conjunction());
    }
    if (parts.size() == 1) return std::move(parts.front());
    auto e = node(Expr::Or, start);
    e->children = std::move(parts);
    return e;
  }

  ExprPtr conjunction() {
    const Token& start = peek();
    std::vector<ExprPtr> parts;
    parts.push_back(unary());
    while (peek().kind == Tok::Comma || at_keyword("and")) {
      take();
      parts.push_back(unary());
    }
    if (parts.size() == 1) return std::move(parts.front());
    auto e = node(Expr::And, start);
    e->children = std::move(parts);
    return e;
  }

  ExprPtr unary() {
    const Token& t = peek();
    if (t.kind == Tok::Not) {
      take();
      auto e = node(Expr::Not, t);
      e->children.push_back(unary());
      return e;
    }
    if (t.kind == Tok::LParen) {
      take();
      auto inner = disjunction();
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (t.kind == Tok::Name && t.text == "true" && peek(1).kind != Tok::LParen) {
      take();
      return node(Expr::True, t);
    }
    if (is_name_token(t) && peek(1).kind == Tok::LParen) {
      auto e = node(Expr::Atom, t);
      e->name = take().text;
      take();
      e->args = arguments();
      return e;
    }
    if (t.kind == Tok::Var || t.kind == Tok::Number || is_name_token(t)) {
      auto e = node(Expr::Compare, t);
      e->args.push_back(term());
      if (peek().kind != Tok::Cmp) fail("expected a comparison operator", peek());
      e->name = take().text;
      e->args.push_back(term());
      return e;
    }
    fail("expected a literal", t);
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

// ---------------------------------------------------------------------------
// Compilation to disjunctive normal form

struct Conj {
  std::vector<std::string> positive;
  std::vector<Literal> literals;
  std::vector<std::string> negative;
};

using Dnf = std::vector<Conj>;

constexpr std::size_t kMaxDisjuncts = 4096;

Op parse_op(const std::string& text) {
  if (text == "=" || text == "==" || text == "=:=") return Op::Eq;
  if (text == "\\=" || text == "\\==" || text == "=\\=" || text == "!=") return Op::Ne;
  if (text == "=<" || text == "<=") return Op::Le;
  if (text == ">=") return Op::Ge;
  if (text == "<") return Op::Lt;
  return Op::Gt;
}

Op mirror(Op op) {
  switch (op) {
    case Op::Le: return Op::Ge;
    case Op::Ge: return Op::Le;
    case Op::Lt: return Op::Gt;
    case Op::Gt: return Op::Lt;
    default: return op;
  }
}

std::optional<double> to_number(const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

class Compiler {
 public:
  Compiler(const Schema& schema, std::string_view target, const std::unordered_set<std::string>& aux_heads)
      : schema_(schema), target_(target), aux_heads_(aux_heads) {}

  Dnf compile(const Statement& st) {
    bindings_.clear();
    if (!st.body) return Dnf{Conj{}};
    bind(*st.body);
    return dnf(*st.body, false);
  }

 private:
  void bind(const Expr& e) {
    for (const auto& c : e.children) bind(*c);
    if (e.kind != Expr::Atom || e.args.size() != 2 || e.args[1].kind != Term::Var) return;
    auto f = schema_.find(e.name);
    if (!f) throw ParseError("unknown feature '" + e.name + "'", e.line, e.column);
    auto [it, inserted] = bindings_.emplace(e.args[1].text, *f);
    if (!inserted && it->second != *f)
      throw ParseError("variable " + e.args[1].text + " bound to two features", e.line, e.column);
  }

  Literal feature_literal(std::size_t f, Op op, const Term& value, const Expr& at) {
    const Feature& feat = schema_[f];
    if (feat.kind == FeatureKind::Categorical) {
      if (is_order_op(op))
        throw ParseError("categorical feature '" + feat.name + "' only admits = and \\=", at.line, at.column);
      return Literal{f, op, value.text};
    }
    auto v = to_number(value.text);
    if (!v) throw ParseError("numeric feature '" + feat.name + "' compared with '" + value.text + "'",
                             value.line, value.column);
    return Literal{f, op, *v};
  }

  Dnf leaf(Conj c) { return Dnf{std::move(c)}; }

  Dnf product(const std::vector<Dnf>& parts, const Expr& at) {
    Dnf acc{Conj{}};
    for (const auto& part : parts) {
      Dnf next;
      for (const auto& a : acc) {
        for (const auto& b : part) {
          Conj c = a;
          c.positive.insert(c.positive.end(), b.positive.begin(), b.positive.end());
          c.literals.insert(c.literals.end(), b.literals.begin(), b.literals.end());
          c.negative.insert(c.negative.end(), b.negative.begin(), b.negative.end());
          next.push_back(std::move(c));
          if (next.size() > kMaxDisjuncts) throw ParseError("rule body too large in normal form", at.line, at.column);
        }
      }
      acc = std::move(next);
    }
    return acc;
  }

  Dnf dnf(const Expr& e, bool negated) {
    switch (e.kind) {
      case Expr::True:
        return negated ? Dnf{} : Dnf{Conj{}};
      case Expr::Not:
        return dnf(*e.children.front(), !negated);
      case Expr::And:
      case Expr::Or: {
        std::vector<Dnf> parts;
        for (const auto& c : e.children) parts.push_back(dnf(*c, negated));
        // De Morgan: a negated conjunction is a disjunction and vice versa.
        if ((e.kind == Expr::And) != negated) return product(parts, e);
        Dnf out;
        for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
        if (out.size() > kMaxDisjuncts) throw ParseError("rule body too large in normal form", e.line, e.column);
        return out;
      }
      case Expr::Atom:
        return atom(e, negated);
      case Expr::Compare:
        return compare(e, negated);
    }
    return {};
  }

  Dnf atom(const Expr& e, bool negated) {
    if (e.args.empty() || e.args.front().kind != Term::Var)
      throw ParseError("first argument of '" + e.name + "' must be the individual variable", e.line, e.column);
    if (e.args.size() == 1) {
      if (aux_heads_.contains(e.name)) {
        Conj c;
        (negated ? c.negative : c.positive).push_back(e.name);
        return leaf(std::move(c));
      }
      auto f = schema_.find(e.name);
      if (!f) throw ParseError("unknown feature or predicate '" + e.name + "'", e.line, e.column);
      // Unary feature atoms test a boolean column.
      Term truth{Term::Const, schema_[*f].kind == FeatureKind::Numeric ? "1" : "true", e.line, e.column};
      Conj c;
      c.literals.push_back(feature_literal(*f, negated ? Op::Ne : Op::Eq, truth, e));
      return leaf(std::move(c));
    }
    if (e.args.size() != 2) throw ParseError("feature atoms take two arguments", e.line, e.column);
    if (e.name == target_) throw ParseError("target predicate used in a rule body", e.line, e.column);
    auto f = schema_.find(e.name);
    if (!f) throw ParseError("unknown feature '" + e.name + "'", e.line, e.column);
    if (e.args[1].kind == Term::Var) return negated ? Dnf{} : Dnf{Conj{}};
    Conj c;
    c.literals.push_back(feature_literal(*f, negated ? Op::Ne : Op::Eq, e.args[1], e));
    return leaf(std::move(c));
  }

  Dnf compare(const Expr& e, bool negated) {
    const Term* var = &e.args[0];
    const Term* value = &e.args[1];
    Op op = parse_op(e.name);
    if (var->kind != Term::Var) {
      std::swap(var, value);
      op = mirror(op);
    }
    if (var->kind != Term::Var || value->kind == Term::Var)
      throw ParseError("comparison needs one feature variable and one constant", e.line, e.column);
    auto bound = bindings_.find(var->text);
    if (bound == bindings_.end())
      throw ParseError("variable " + var->text + " is not bound to a feature", var->line, var->column);
    Conj c;
    c.literals.push_back(feature_literal(bound->second, negated ? complement(op) : op, *value, e));
    return leaf(std::move(c));
  }

  const Schema& schema_;
  std::string target_;
  const std::unordered_set<std::string>& aux_heads_;
  std::unordered_map<std::string, std::size_t> bindings_;
};

struct ParsedStatement {
  const Statement* source = nullptr;
  bool is_target = false;
  std::string label;
  Dnf body;
};

struct ParsedFile {
  std::vector<Statement> statements;
  std::vector<ParsedStatement> parsed;
};

ParsedFile parse_file(std::string_view text, const Schema& schema, std::string_view target) {
  ParsedFile file;
  file.statements = Parser(Lexer(text).run()).run();

  std::unordered_set<std::string> aux_heads;
  for (const auto& st : file.statements) {
    if (st.head_args.size() != 1) continue;
    if (st.head == target) throw ParseError("target predicate '" + st.head + "' needs a class argument", st.line, st.column);
    if (schema.find(st.head)) throw ParseError("rule head '" + st.head + "' clashes with a feature", st.line, st.column);
    if (st.head_args[0].kind != Term::Var) throw ParseError("auxiliary head must take the individual variable", st.line, st.column);
    if (st.confidence) throw ParseError("confidence annotations belong on class rules", st.line, st.column);
    aux_heads.insert(st.head);
  }

  Compiler compiler(schema, target, aux_heads);
  for (const auto& st : file.statements) {
    ParsedStatement ps;
    ps.source = &st;
    if (st.head_args.size() == 2) {
      if (st.head != target)
        throw ParseError("head '" + st.head + "' is not the class predicate '" + std::string(target) + "'",
                         st.line, st.column);
      const Term& a = st.head_args[0];
      const Term& b = st.head_args[1];
      const Term* label = nullptr;
      if (a.kind == Term::Var && b.kind != Term::Var) label = &b;
      if (b.kind == Term::Var && a.kind != Term::Var) label = &a;
      if (!label) throw ParseError("class head needs one variable and one class constant", st.line, st.column);
      ps.is_target = true;
      ps.label = label->text;
    } else if (st.head_args.size() != 1) {
      throw ParseError("head '" + st.head + "' is not the class predicate", st.line, st.column);
    }
    ps.body = compiler.compile(st);
    file.parsed.push_back(std::move(ps));
  }
  return file;
}

Clause to_clause(const ParsedStatement& ps, const Conj& c, std::string_view target) {
  Clause out;
  out.head = ps.is_target ? std::string(target) : ps.source->head;
  if (ps.is_target) {
    out.label = ps.label;
    out.confidence = ps.source->confidence;
  }
  out.positive = c.positive;
  out.literals = c.literals;
  out.negative = c.negative;
  return out;
}

std::optional<std::size_t> rule_number(const std::string& head) {
  if (!head.starts_with("rule") || head.size() == 4) return std::nullopt;
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(head.data() + 4, head.data() + head.size(), v);
  if (ec != std::errc() || ptr != head.data() + head.size()) return std::nullopt;
  return v;
}

std::string rename(const std::unordered_map<std::string, std::string>& map, const std::string& name) {
  auto it = map.find(name);
  return it == map.end() ? name : it->second;
}

void validate_against(const Schema& schema, const AnnotatedRule& ar) {
  for (const auto& aux : ar.aux) {
    for (const auto& lit : aux.body) {
      if (lit.feature >= schema.size()) throw DataError("knowledge literal outside the dataset schema");
      const bool numeric = schema[lit.feature].kind == FeatureKind::Numeric;
      if (numeric != std::holds_alternative<double>(lit.value))
        throw DataError("knowledge literal on '" + schema[lit.feature].name + "' does not match the column type");
    }
  }
}

}  // namespace

std::vector<Clause> parse_clauses(std::string_view text, const Schema& schema, std::string_view target) {
  ParsedFile file = parse_file(text, schema, target);
  std::vector<Clause> out;
  for (const auto& ps : file.parsed)
    for (const auto& c : ps.body) out.push_back(to_clause(ps, c, target));
  return out;
}

std::vector<KnowledgeRule> parse_rules(std::string_view text, const Schema& schema, std::string_view target,
                                       bool fixed) {
  ParsedFile file = parse_file(text, schema, target);

  std::vector<Rule> pool;
  std::size_t next = 0;
  for (const auto& ps : file.parsed) {
    if (auto n = rule_number(ps.source->head)) next = std::max(next, *n);
    for (const auto& c : ps.body) {
      for (const auto& p : c.positive)
        if (auto n = rule_number(p)) next = std::max(next, *n);
      for (const auto& p : c.negative)
        if (auto n = rule_number(p)) next = std::max(next, *n);
    }
    if (ps.is_target) continue;
    for (const auto& c : ps.body) pool.push_back(Rule{ps.source->head, c.literals, c.positive, c.negative});
  }

  std::vector<KnowledgeRule> out;
  std::vector<std::string> earlier_bodies;
  for (const auto& ps : file.parsed) {
    if (!ps.is_target) continue;
    const Statement& st = *ps.source;
    if (ps.body.empty()) throw ParseError("rule body can never hold", st.line, st.column);

    Dnf body = ps.body;
    for (auto& c : body)
      std::erase_if(c.negative, [&](const std::string& n) {
        return std::find(earlier_bodies.begin(), earlier_bodies.end(), n) != earlier_bodies.end();
      });

    std::string symbol;
    std::vector<Rule> local = pool;
    if (body.size() == 1 && body[0].positive.size() == 1 && body[0].literals.empty() && body[0].negative.empty()) {
      symbol = body[0].positive.front();
    } else {
      symbol = "rule" + std::to_string(++next);
      for (const auto& c : body) local.push_back(Rule{symbol, c.literals, c.positive, c.negative});
    }

    KnowledgeRule kr;
    kr.cls = ps.label;
    kr.fixed = fixed;
    kr.confidence = st.confidence;
    kr.rule.rule = Rule{ps.label, {}, {symbol}, {}};
    kr.rule.cls = ps.label;
    kr.rule.fixed = fixed;
    kr.rule.confidence = st.confidence.value_or(1.0);
    try {
      kr.rule.aux = reachable(local, kr.rule.rule.calls);
      check_stratified(kr.rule.aux, kr.rule.rule.calls);
    } catch (const MalformedProgram& e) {
      throw ParseError(e.what(), st.line, st.column);
    }
    earlier_bodies.push_back(symbol);
    out.push_back(std::move(kr));
  }
  return out;
}

Program parse_program(std::string_view text, const Schema& schema, std::string_view target,
                      std::vector<std::string> classes) {
  std::vector<AnnotatedRule> rules;
  for (auto& kr : parse_rules(text, schema, target, false)) {
    kr.rule.fixed = false;
    rules.push_back(std::move(kr.rule));
  }
  try {
    return Program(schema, std::string(target), std::move(classes), std::move(rules));
  } catch (const MalformedProgram& e) {
    throw ParseError(e.what(), 1, 1);
  }
}

Program inject(std::span<const KnowledgeRule> knowledge, const Dataset& data, const LearnerConfig& cfg,
               IterationHook hook) {
  Trainer trainer(data, cfg, std::move(hook));
  for (const auto& kr : knowledge) {
    validate_against(data.schema(), kr.rule);
    trainer.namer().reserve(kr.rule.aux);
  }

  // Knowledge files are parsed independently, so symbols may collide.
  std::unordered_set<std::string> used;
  for (const auto& kr : knowledge) {
    AnnotatedRule ar = kr.rule;
    std::unordered_map<std::string, std::string> map;
    for (const auto& aux : ar.aux) {
      if (map.contains(aux.head) || !used.contains(aux.head)) continue;
      map[aux.head] = aux.head == ar.rule.calls.front() ? trainer.namer().next_rule() : trainer.namer().next_ab();
    }
    for (auto& aux : ar.aux) {
      aux.head = rename(map, aux.head);
      for (auto& c : aux.calls) c = rename(map, c);
      for (auto& e : aux.exceptions) e = rename(map, e);
    }
    for (auto& c : ar.rule.calls) c = rename(map, c);
    for (const auto& aux : ar.aux) used.insert(aux.head);
    ar.cls = kr.cls;
    ar.rule.head = kr.cls;
    if (kr.confidence) ar.confidence = *kr.confidence;
    trainer.add_rule(std::move(ar), !kr.fixed, kr.confidence.has_value());
  }
  trainer.learn();
  return std::move(trainer).finish();
}

}  // namespace confold
