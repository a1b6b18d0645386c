#include <doctest.h>

#include <algorithm>
#include <bit>

#include "secure/error.hpp"
#include "secure/logic.hpp"

using namespace secure;

namespace {

DomainModel cubes_model() {
  DomainModel m({"o1", "o2", "o3"}, {{"cube", 1}, {"red", 1}, {"left_of", 2}});
  m.add("cube", {"o1"});
  m.add("cube", {"o3"});
  m.add("red", {"o2"});
  m.add("left_of", {"o1", "o2"});
  m.add("left_of", {"o1", "o3"});
  m.add("left_of", {"o2", "o3"});
  return m;
}

Formula cube(std::string_view t) { return Formula::atom("cube", t); }
Formula red(std::string_view t) { return Formula::atom("red", t); }

}  // namespace

TEST_CASE("herbrand base expands vocabulary times objects") {
  auto hb = herbrand_base({"o1", "o2"}, {{"cube", 1}});
  REQUIRE(hb.size() == 2);
  CHECK(hb[0].str() == "cube(o1)");
  CHECK(hb[1].str() == "cube(o2)");

  hb = herbrand_base({"o1"}, {{"red", 1}, {"cube", 1}});
  REQUIRE(hb.size() == 2);
  CHECK(hb[0].str() == "red(o1)");
  CHECK(hb[1].str() == "cube(o1)");

  std::vector<ObjectId> objs;
  for (int i = 1; i <= 7; ++i) objs.push_back("o" + std::to_string(i));
  std::vector<Symbol> vocab;
  for (int i = 0; i < 13; ++i) vocab.push_back({"p" + std::to_string(i), 1});
  CHECK(herbrand_base(objs, vocab).size() == 91);

  CHECK(herbrand_base({"a", "b", "c"}, {{"left_of", 2}}).size() == 9);
}

TEST_CASE("atoms, negation and generalised quantifiers") {
  DomainModel m({"o1", "o2"}, {{"cube", 1}});
  m.add("cube", {"o1"});
  m.add("cube", {"o2"});
  CHECK(eval_formula(m, cube("o1")));
  CHECK_FALSE(eval_formula(m, Formula::negate(cube("o1"))));
  CHECK(eval_formula(m, Formula::quantified(Quantifier::the(2), "x", cube("x"), cube("x"))));
  CHECK_FALSE(eval_formula(m, Formula::quantified(Quantifier::the(1), "x", cube("x"), cube("x"))));
  CHECK(eval_formula(m, Formula::quantified(Quantifier::universal(), "x", cube("x"), cube("x"))));
}

TEST_CASE("evaluation errors name the culprit") {
  auto m = cubes_model();
  CHECK_THROWS_WITH_AS(eval_formula(m, Formula::atom("sphere", "o1")), doctest::Contains("sphere"), EvalError);
  CHECK_THROWS_AS(eval_formula(m, cube("x")), EvalError);
  CHECK(eval_formula(m, {{"x", "o1"}}, cube("x")));
}

TEST_CASE("nested quantifier in a restrictor") {
  auto m = cubes_model();
  // cubes with a red object to their left
  const Formula phi = Formula::conj(
      cube("x"), Formula::quantified(Quantifier::existential(), "x1", red("x1"), Formula::atom("left_of", "x1", "x")));
  const auto p = project_model(m, phi, "x");
  CHECK(p.objects() == std::vector<ObjectId>{"o3"});
  for (const auto& o : m.objects()) {
    const bool in = std::count(p.objects().begin(), p.objects().end(), o) == 1;
    CHECK(in == eval_formula(m, phi.substitute("x", o)));
  }
}

TEST_CASE("projection") {
  auto m = cubes_model();
  CHECK(project_model(m, cube("x"), "x").objects() == std::vector<ObjectId>{"o1", "o3"});
  CHECK(project_model(m, Formula::conj(red("x"), cube("x")), "x").objects().empty());
  const auto once = project_model(m, cube("x"), "x");
  CHECK(project_model(once, cube("x"), "x").objects() == once.objects());
  CHECK(once.holds("left_of", {0, 1}));
}

TEST_CASE("referents of the worked expressions") {
  DomainModel m({"o1", "o2"}, {{"cube", 1}, {"red", 1}});
  m.add("cube", {"o1"});
  m.add("cube", {"o2"});
  CHECK(referent_of(m, {Quantifier::universal(), "x", cube("x")}) == Referent{{"o1", "o2"}});
  CHECK(referent_of(m, {Quantifier::existential(), "x", cube("x")}) == Referent{{"o1"}, {"o2"}});
  CHECK(referent_of(m, {Quantifier::the(1), "x", red("x")}).empty());
  CHECK(referent_of(m, {Quantifier::both(), "x", cube("x")}) == referent_of(m, {Quantifier::the(2), "x", cube("x")}));
}

TEST_CASE("referents against a set-comprehension oracle") {
  const std::vector<Quantifier> qs = {
      Quantifier::exactly(1), Quantifier::exactly(2), Quantifier::at_most(1), Quantifier::at_most(2),
      Quantifier::at_least(1), Quantifier::at_least(2), Quantifier::existential(), Quantifier::universal(),
      Quantifier::the(1), Quantifier::the(2), Quantifier::both(), Quantifier::all_but(1),
      Quantifier::n_of_the(1, 2), Quantifier::n_of_the(2, 3)};
  for (int n = 1; n <= 4; ++n) {
    std::vector<ObjectId> objs;
    for (int i = 0; i < n; ++i) objs.push_back("o" + std::to_string(i));
    for (unsigned ext = 0; ext < (1u << n); ++ext) {
      DomainModel m(objs, {{"cube", 1}});
      std::size_t r = 0;
      for (int i = 0; i < n; ++i)
        if (ext >> i & 1u) {
          m.add("cube", {objs[i]});
          ++r;
        }
      for (const auto& q : qs) {
        Referent expect;
        for (unsigned sub = 0; sub < (1u << n); ++sub) {
          if ((sub & ~ext) != 0) continue;
          const std::size_t k = std::popcount(sub);
          bool ok = false;
          switch (q.kind) {
            case QuantifierKind::exactly_n: ok = k == std::size_t(q.n); break;
            case QuantifierKind::at_most_n: ok = k <= std::size_t(q.n); break;
            case QuantifierKind::at_least_n: ok = k >= std::size_t(q.n); break;
            case QuantifierKind::a: ok = k == 1; break;
            case QuantifierKind::every: ok = k == r; break;
            case QuantifierKind::the_n: ok = k == r && r == std::size_t(q.n); break;
            case QuantifierKind::both: ok = k == r && r == 2; break;
            case QuantifierKind::all_but_n: ok = r > std::size_t(q.n) && k == r - q.n; break;
            case QuantifierKind::n_of_the_m: ok = r == std::size_t(q.m) && k == std::size_t(q.n); break;
          }
          if (!ok) continue;
          std::vector<ObjectId> set;
          for (int i = 0; i < n; ++i)
            if (sub >> i & 1u) set.push_back(objs[i]);
          expect.push_back(set);
        }
        auto got = referent_of(m, {q, "x", cube("x")});
        std::sort(expect.begin(), expect.end());
        std::sort(got.begin(), got.end());
        CHECK_MESSAGE(got == expect, q.name() << " n=" << n << " ext=" << ext);
      }
    }
  }
}

TEST_CASE("classical equivalences on ground formulas") {
  auto m = cubes_model();
  const std::vector<Formula> atoms = {cube("o1"), cube("o2"), red("o2"), red("o3")};
  for (const auto& p : atoms) {
    CHECK(eval_formula(m, Formula::negate(Formula::negate(p))) == eval_formula(m, p));
    for (const auto& q : atoms) {
      CHECK(eval_formula(m, Formula::negate(Formula::conj(p, q))) ==
            eval_formula(m, Formula::disj(Formula::negate(p), Formula::negate(q))));
      CHECK(eval_formula(m, Formula::negate(Formula::disj(p, q))) ==
            eval_formula(m, Formula::conj(Formula::negate(p), Formula::negate(q))));
      CHECK(eval_formula(m, Formula::implies(p, q)) == eval_formula(m, Formula::disj(Formula::negate(p), q)));
      CHECK(eval_formula(m, Formula::iff(p, q)) == (eval_formula(m, p) == eval_formula(m, q)));
    }
  }
}

TEST_CASE("definite referents are unique and members satisfy the restrictor") {
  auto m = cubes_model();
  for (const auto& q : {Quantifier::the(2), Quantifier::both(), Quantifier::universal()})
    CHECK(referent_of(m, {q, "x", cube("x")}).size() <= 1);
  for (const auto& set : referent_of(m, {Quantifier::existential(), "x", cube("x")})) CHECK(set.size() == 1);
  for (const auto& set : referent_of(m, {Quantifier::at_least(1), "x", cube("x")}))
    for (const auto& o : set) CHECK(eval_formula(m, cube(o)));
}

TEST_CASE("textual notation round-trips") {
  const Formula f = Formula::quantified(Quantifier::the(2), "x", Formula::atom("grannysmith", "x"),
                                        Formula::atom("object", "x"));
  CHECK(parse_formula(f.str()) == f);
  const Formula g = Formula::conj(cube("x"), Formula::implies(red("o1"), Formula::negate(cube("o2"))));
  CHECK(parse_formula(g.str()) == g);
  const RefForm r{Quantifier::n_of_the(2, 3), "x", cube("x")};
  CHECK(parse_refform(r.str()) == r);
  CHECK(quantifier_from_name("_2_of_the_3_q") == Quantifier::n_of_the(2, 3));
  CHECK(quantifier_from_name("_every_q") == Quantifier::universal());
  CHECK_FALSE(quantifier_from_name("_some_q").has_value());
}

TEST_CASE("well-formedness") {
  CHECK(RefForm{Quantifier::universal(), "x", cube("x")}.well_formed());
  CHECK_FALSE(RefForm{Quantifier::universal(), "x", cube("y")}.well_formed());
  const Formula rebinding = Formula::quantified(Quantifier::existential(), "x", cube("x"),
                                                Formula::quantified(Quantifier::existential(), "x", red("x"), red("x")));
  CHECK_FALSE(rebinding.well_formed());
}
