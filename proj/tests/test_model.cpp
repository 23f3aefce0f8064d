#include <doctest.h>

#include <random>

#include "confold/knowledge.hpp"
#include "confold/learner.hpp"
#include "confold/model.hpp"
#include "support.hpp"

using namespace confold;
using testing::row;
using testing::table;

namespace {

Schema female_schema() {
  return Schema({{"age", FeatureKind::Numeric}, {"name", FeatureKind::Categorical},
                 {"fav_color", FeatureKind::Categorical}});
}

// female(X) :- rule1(X).  rule1 :- age > 16, not ab.  ab :- name = sam, not fav_color = purple.
std::vector<Rule> female_aux(const Schema& s) {
  return {
      Rule{"rule1", {make_literal(s, "age", Op::Gt, 16.0)}, {}, {"ab"}},
      Rule{"ab", {make_literal(s, "name", Op::Eq, "sam"), make_literal(s, "fav_color", Op::Ne, "purple")}, {}, {}},
  };
}

Example person(double age, std::string name, std::string colour) {
  return row("?", {age, std::move(name), std::move(colour)});
}

Program titanic() {
  Schema s({{"sex", FeatureKind::Categorical}});
  std::vector<AnnotatedRule> rules;
  rules.push_back({Rule{"false", {}, {"rule1"}, {}}, {Rule{"rule1", {make_literal(s, "sex", Op::Ne, "female")}, {}, {}}},
                   0.81, "false", false});
  rules.push_back({Rule{"true", {}, {"rule2"}, {}}, {Rule{"rule2", {make_literal(s, "sex", Op::Eq, "female")}, {}, {}}},
                   0.74, "true", false});
  return Program(s, "survived", {"false", "true"}, std::move(rules));
}

}  // namespace

TEST_CASE("literal satisfaction") {
  const Schema s = female_schema();
  CHECK(satisfies(person(18, "adam", "red"), make_literal(s, "age", Op::Gt, 16.0)));
  CHECK_FALSE(satisfies(person(16, "adam", "red"), make_literal(s, "age", Op::Gt, 16.0)));
  CHECK(satisfies(person(16, "adam", "red"), make_literal(s, "age", Op::Le, 16.0)));
  CHECK(satisfies(person(16, "adam", "red"), make_literal(s, "age", Op::Ge, 16.0)));
  CHECK_FALSE(satisfies(person(16, "adam", "red"), make_literal(s, "age", Op::Lt, 16.0)));

  Schema sex({{"sex", FeatureKind::Categorical}});
  CHECK(satisfies(row("?", {std::string("female")}), make_literal(sex, "sex", Op::Eq, "female")));
  CHECK_FALSE(satisfies(row("?", {std::string("female")}), make_literal(sex, "sex", Op::Ne, "female")));

  SUBCASE("missing never satisfies") {
    Schema x({{"x", FeatureKind::Numeric}});
    const auto missing = row("?", {Missing{}});
    for (Op op : {Op::Eq, Op::Ne, Op::Le, Op::Gt, Op::Lt, Op::Ge})
      CHECK_FALSE(satisfies(missing, make_literal(x, "x", op, 5.0)));
    CHECK_FALSE(satisfies(row("?", {Missing{}}), make_literal(sex, "sex", Op::Ne, "male")));
  }
  SUBCASE("cross-type values are false, not errors") {
    CHECK_FALSE(satisfies(row("?", {std::string("18")}), Literal{0, Op::Gt, 16.0}));
    CHECK_FALSE(satisfies(row("?", {18.0}), Literal{0, Op::Ne, std::string("a")}));
  }
  SUBCASE("admissibility") {
    CHECK_THROWS_AS(make_literal(sex, "sex", Op::Gt, "f"), InvalidLiteral);
    CHECK_THROWS_AS(make_literal(sex, "sex", Op::Eq, 1.0), InvalidLiteral);
    CHECK_THROWS_AS(make_literal(s, "age", Op::Eq, "old"), InvalidLiteral);
    CHECK_THROWS_AS(make_literal(s, "height", Op::Eq, 1.0), InvalidLiteral);
    CHECK_THROWS_AS(satisfies(person(1, "a", "b"), Literal{7, Op::Eq, 1.0}), InvalidLiteral);
  }
}

TEST_CASE("exception semantics of the female rules") {
  const Schema s = female_schema();
  const auto aux = female_aux(s);
  const Rule female{"female", {}, {"rule1"}, {}};
  CHECK(fires(female, aux, person(18, "adam", "red")));
  CHECK_FALSE(fires(female, aux, person(18, "sam", "red")));
  CHECK(fires(female, aux, person(18, "sam", "purple")));
  CHECK_FALSE(fires(female, aux, person(12, "adam", "red")));

  const std::vector<Rule> dangling{Rule{"rule1", {}, {}, {"ab9"}}};
  CHECK_THROWS_AS(fires(female, dangling, person(18, "adam", "red")), MalformedProgram);
}

TEST_CASE("dataset invariants") {
  auto d = table({{"x", FeatureKind::Numeric}}, {row("b", {1.0}), row("a", {2.0}), row("b", {Missing{}})});
  CHECK(d.classes() == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(table({{"x", FeatureKind::Numeric}}, {row("a", {std::string("s")})}), DataError);
  CHECK_THROWS_AS(table({{"x", FeatureKind::Categorical}}, {row("a", {1.0})}), DataError);
  CHECK_THROWS_AS(table({{"x", FeatureKind::Numeric}}, {row("a", {1.0, 2.0})}), DataError);
  CHECK_THROWS_AS(table({{"x", FeatureKind::Numeric}}, {row("a", {std::nan("")})}), DataError);
  const std::size_t pick[] = {2};
  CHECK(d.subset(pick).size() == 1);
}

TEST_CASE("classify is first match") {
  const Program p = titanic();
  auto male = classify(p, row("?", {std::string("male")}));
  REQUIRE(male);
  CHECK(male->cls == "false");
  CHECK(male->confidence == 0.81);
  auto female = classify(p, row("?", {std::string("female")}));
  REQUIRE(female);
  CHECK(female->cls == "true");
  CHECK(female->rule_index == 1);

  // Missing sex satisfies neither literal.
  CHECK_FALSE(classify(p, row("?", {Missing{}})));

  Program empty(p.schema(), "survived", {"false", "true"});
  CHECK_FALSE(classify(empty, row("?", {std::string("male")})));
  CHECK(export_program(empty).empty());

  Schema s({{"x", FeatureKind::Numeric}});
  std::vector<AnnotatedRule> both;
  both.push_back({Rule{"a", {}, {"rule1"}, {}}, {Rule{"rule1", {make_literal(s, "x", Op::Gt, 0.0)}, {}, {}}}, 0.6, "a"});
  both.push_back({Rule{"b", {}, {"rule2"}, {}}, {Rule{"rule2", {make_literal(s, "x", Op::Gt, 1.0)}, {}, {}}}, 0.9, "b"});
  Program overlap(s, "class", {"a", "b"}, std::move(both));
  CHECK(classify(overlap, row("?", {5.0}))->cls == "a");
}

TEST_CASE("titanic listing") {
  CHECK(export_program(titanic()) ==
        "0.81::survived(X,false) :- rule1(X).\n"
        "0.74::survived(X,true) :- rule2(X), not rule1(X).\n"
        "rule1(X) :- not sex(X,female).\n"
        "rule2(X) :- sex(X,female).\n");
}

TEST_CASE("export grammar") {
  Schema s({{"f", FeatureKind::Categorical}, {"age", FeatureKind::Numeric}, {"Odd name", FeatureKind::Categorical}});
  std::vector<AnnotatedRule> rules;
  rules.push_back({Rule{"c", {}, {"rule1"}, {}}, {Rule{"rule1", {make_literal(s, "f", Op::Eq, "v")}, {}, {}}}, 0.55, "c"});
  CHECK(export_program(Program(s, "class", {"c"}, rules)) ==
        "0.55::class(X,c) :- rule1(X).\nrule1(X) :- f(X,v).\n");

  rules.clear();
  rules.push_back({Rule{"Yes", {}, {"rule1"}, {}},
                   {Rule{"rule1",
                         {make_literal(s, "age", Op::Gt, 16.0), make_literal(s, "age", Op::Le, 40.5),
                          make_literal(s, "Odd name", Op::Ne, "it's")},
                         {},
                         {"ab1"}},
                    Rule{"ab1", {}, {}, {}}},
                   1.0,
                   "Yes"});
  CHECK(export_program(Program(s, "class", {"Yes"}, rules)) ==
        "1::class(X,'Yes') :- rule1(X).\n"
        "rule1(X) :- age(X,N1), N1>16, age(X,N2), N2=<40.5, not 'Odd name'(X,'it\\'s'), not ab1(X).\n"
        "ab1(X) :- true.\n");

  CHECK(quote_atom("abc_1") == "abc_1");
  CHECK(quote_atom("3.5") == "3.5");
  CHECK(quote_atom("-2") == "-2");
  CHECK(quote_atom("not") == "'not'");
  CHECK(quote_atom("a b") == "'a b'");
  CHECK(quote_atom("") == "''");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(16.0) == "16");
}

TEST_CASE("program construction checks") {
  Schema s({{"x", FeatureKind::Numeric}});
  const Rule body{"rule1", {make_literal(s, "x", Op::Gt, 0.0)}, {}, {}};
  SUBCASE("cyclic negation") {
    std::vector<Rule> aux{Rule{"rule1", {}, {}, {"ab1"}}, Rule{"ab1", {}, {}, {"rule1"}}};
    CHECK_THROWS_AS(Program(s, "class", {"a"}, {{Rule{"a", {}, {"rule1"}, {}}, aux, 0.5, "a"}}), MalformedProgram);
  }
  SUBCASE("shared auxiliary symbol") {
    std::vector<AnnotatedRule> rules{{Rule{"a", {}, {"rule1"}, {}}, {body}, 0.5, "a"},
                                     {Rule{"b", {}, {"rule1"}, {}}, {body}, 0.5, "b"}};
    CHECK_THROWS_AS(Program(s, "class", {"a", "b"}, rules), MalformedProgram);
  }
  SUBCASE("dangling reference") {
    CHECK_THROWS_AS(Program(s, "class", {"a"}, {{Rule{"a", {}, {"rule7"}, {}}, {body}, 0.5, "a"}}), MalformedProgram);
  }
  SUBCASE("confidence range") {
    CHECK_THROWS_AS(Program(s, "class", {"a"}, {{Rule{"a", {}, {"rule1"}, {}}, {body}, 1.5, "a"}}), MalformedProgram);
  }
}

TEST_CASE("reachable is depth-first pre-order") {
  std::vector<Rule> pool{Rule{"ab2", {}, {}, {}}, Rule{"ab1", {}, {}, {"ab2"}}, Rule{"rule1", {}, {}, {"ab1", "ab3"}},
                         Rule{"ab3", {}, {}, {}}, Rule{"stray", {}, {}, {}}};
  const std::string root[] = {"rule1"};
  auto got = reachable(pool, root);
  REQUIRE(got.size() == 4);
  CHECK(got[0].head == "rule1");
  CHECK(got[1].head == "ab1");
  CHECK(got[2].head == "ab2");
  CHECK(got[3].head == "ab3");
}

TEST_CASE("missing values only switch literals off") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto data = testing::random_dataset(rng, {60, 5, 3, 0.0});
    const auto& schema = data.schema();
    for (const auto& ex : data.examples()) {
      for (std::size_t f = 0; f < schema.size(); ++f) {
        Example blanked = ex;
        blanked.values[f] = Missing{};
        for (const auto& other : data.examples()) {
          const FeatureValue& v = other.values[f];
          if (std::holds_alternative<Missing>(v)) continue;
          const Constant c = std::holds_alternative<double>(v) ? Constant{std::get<double>(v)}
                                                               : Constant{std::get<std::string>(v)};
          const bool numeric = schema[f].kind == FeatureKind::Numeric;
          for (Op op : {Op::Eq, Op::Ne, Op::Le, Op::Gt, Op::Lt, Op::Ge}) {
            if (!numeric && is_order_op(op)) continue;
            const Literal lit{f, op, c};
            CHECK((!satisfies(blanked, lit) || satisfies(ex, lit)));
          }
          break;
        }
      }
    }
  }
}

TEST_CASE("classify agrees with bottom-up evaluation of the export") {
  std::mt19937_64 rng(5);
  std::size_t programs = 0;
  while (programs < 50) {
    auto data = testing::random_dataset(rng, {120, 6, 4, 0.05});
    auto program = confold::confold(data, {});
    if (program.empty()) continue;
    ++programs;
    auto clauses = parse_clauses(export_program(program), data.schema(), program.target());
    StratifiedProgram oracle(clauses);
    std::uniform_int_distribution<std::size_t> any(0, data.size() - 1);
    for (int i = 0; i < 1000; ++i) {
      // Mix rows from the data with per-column recombinations of them.
      Example ex = data[any(rng)];
      for (std::size_t f = 0; f < ex.values.size(); ++f)
        if (rng() % 3 == 0) ex.values[f] = data[any(rng)].values[f];
      auto verdict = classify(program, ex);
      auto derived = oracle.derive(ex);
      if (verdict) {
        REQUIRE(!derived.empty());
        CHECK(derived.front().label == verdict->cls);
        CHECK(derived.front().confidence == verdict->confidence);
        CHECK(derived.size() == 1);
      } else {
        CHECK(derived.empty());
      }
    }
  }
}
