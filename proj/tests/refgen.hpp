// Random referential forms shaped like the parser's output.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "secure/logic.hpp"
#include "secure/parser.hpp"

namespace refgen {

using namespace secure;

inline const std::vector<std::string>& adjectives() {
  static const std::vector<std::string> v = {"red",   "green",  "blue",   "cyan",  "grey", "magenta",
                                             "yellow", "plain", "dotted", "star",  "blicket", "shiny"};
  return v;
}

inline const std::vector<std::string>& nouns() {
  static const std::vector<std::string> v = {"cube",   "rectangle", "cylinder",        "block",
                                             "sphere", "cone",      "object",          "grannysmith",
                                             "basket", "pinklady",  "goldendelicious", "dax"};
  return v;
}

inline Quantifier random_quantifier(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 8), num(1, 4);
  const int n = num(rng);
  switch (kind(rng)) {
    case 0: return Quantifier::exactly(n);
    case 1: return Quantifier::at_most(n);
    case 2: return Quantifier::at_least(n);
    case 3: return Quantifier::existential();
    case 4: return Quantifier::universal();
    case 5: return Quantifier::the(n);
    case 6: return Quantifier::both();
    case 7: return Quantifier::all_but(n);
    default: return Quantifier::n_of_the(n, n + std::uniform_int_distribution<int>(0, 3)(rng));
  }
}

inline RefForm random_refform(std::mt19937_64& rng, int depth = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::string var = depth == 0 ? "x" : "x" + std::to_string(depth);
  std::vector<Formula> head;
  const int adjs = std::uniform_int_distribution<int>(0, 2)(rng);
  for (int i = 0; i < adjs; ++i)
    head.push_back(Formula::atom(adjectives()[rng() % adjectives().size()], {Term::variable(var)}));
  head.push_back(Formula::atom(nouns()[rng() % nouns().size()], {Term::variable(var)}));
  Formula restrictor = Formula::conj(head);
  if (depth < 2 && u(rng) < 0.4) {
    static const Relation rels[] = {Relation::left,   Relation::right, Relation::front, Relation::behind,
                                    Relation::inside, Relation::above, Relation::below};
    const RefForm inner = random_refform(rng, depth + 1);
    const Relation rel = rels[rng() % 7];
    restrictor = Formula::quantified(
        inner.quantifier, inner.variable, inner.restrictor,
        Formula::conj(restrictor, Formula::atom(relation_symbol(rel), {Term::variable(var), Term::variable(inner.variable)})));
  }
  if (u(rng) < 0.1) restrictor = Formula::negate(restrictor);
  return {random_quantifier(rng), var, restrictor};
}

}  // namespace refgen
