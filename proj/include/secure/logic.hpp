// First-order logic with generalised quantifiers over finite domain models.
//
// Formulas are immutable trees shared by pointer, so copying a Formula is
// cheap and two formulas compare structurally. Object constants are plain
// string identifiers; every object of a DomainModel has exactly one.

#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace secure {

using ObjectId = std::string;

struct Symbol {
  std::string name;
  int arity = 1;

  friend bool operator==(const Symbol&, const Symbol&) = default;
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

enum class QuantifierKind {
  exactly_n,
  at_most_n,
  at_least_n,
  a,
  every,
  the_n,
  both,
  all_but_n,
  n_of_the_m,
};

struct Quantifier {
  QuantifierKind kind = QuantifierKind::a;
  int n = 0;
  int m = 0;

  static Quantifier exactly(int n) { return {QuantifierKind::exactly_n, n, 0}; }
  static Quantifier at_most(int n) { return {QuantifierKind::at_most_n, n, 0}; }
  static Quantifier at_least(int n) { return {QuantifierKind::at_least_n, n, 0}; }
  static Quantifier existential() { return {QuantifierKind::a, 0, 0}; }
  static Quantifier universal() { return {QuantifierKind::every, 0, 0}; }
  static Quantifier the(int n) { return {QuantifierKind::the_n, n, 0}; }
  static Quantifier both() { return {QuantifierKind::both, 0, 0}; }
  static Quantifier all_but(int n) { return {QuantifierKind::all_but_n, n, 0}; }
  static Quantifier n_of_the(int n, int m) { return {QuantifierKind::n_of_the_m, n, m}; }

  bool takes_n() const noexcept;
  bool valid() const noexcept;

  // Truth condition on |R| (restrictor set) and |R ∩ B|.
  bool holds(std::size_t restrictor, std::size_t overlap) const noexcept;

  // Whether a designation set of `size` objects is admitted by the referent
  // constructor when the projected domain has `domain` objects.
  bool admits(std::size_t size, std::size_t domain) const noexcept;

  // the_n, both and every denote a unique set.
  bool definite() const noexcept;

  // Logic symbol, e.g. "_the_2_q".
  std::string name() const;

  friend bool operator==(const Quantifier&, const Quantifier&) = default;
};

// Parses a logic symbol such as "_every_q" or "_2_of_the_3_q".
std::optional<Quantifier> quantifier_from_name(std::string_view name);

struct Term {
  enum class Kind { constant, variable };
  Kind kind = Kind::variable;
  std::string id;

  static Term constant(std::string id) { return {Kind::constant, std::move(id)}; }
  static Term variable(std::string id) { return {Kind::variable, std::move(id)}; }

  friend bool operator==(const Term&, const Term&) = default;
};

class Formula {
 public:
  enum class Kind {
    truth,
    falsity,
    atom,
    negation,
    conjunction,
    disjunction,
    implication,
    biconditional,
    quantified,
  };

  // Default-constructs ⊤.
  Formula();

  static Formula top();
  static Formula bottom();
  static Formula atom(std::string predicate, std::vector<Term> terms);
  static Formula atom(std::string predicate, std::string_view first);
  static Formula atom(std::string predicate, std::string_view first,
                      std::string_view second);
  static Formula negate(Formula operand);
  static Formula conj(Formula lhs, Formula rhs);
  static Formula disj(Formula lhs, Formula rhs);
  static Formula implies(Formula lhs, Formula rhs);
  static Formula iff(Formula lhs, Formula rhs);
  static Formula quantified(Quantifier q, std::string variable,
                            Formula restrictor, Formula body);

  // Left-folded conjunction; ⊤ for an empty list.
  static Formula conj(std::span<const Formula> parts);

  Kind kind() const noexcept;
  bool is_binary() const noexcept;

  // Atom accessors.
  const std::string& predicate() const;
  std::span<const Term> terms() const;

  // Negation operand, or lhs/rhs of a binary connective.
  const Formula& operand() const;
  const Formula& lhs() const;
  const Formula& rhs() const;

  // Generalised-quantifier accessors.
  const Quantifier& quantifier() const;
  const std::string& variable() const;
  const Formula& restrictor() const;
  const Formula& body() const;

  std::set<std::string> free_variables() const;
  bool closed() const { return free_variables().empty(); }

  // Predicate symbols in order of first occurrence, with their arities.
  std::vector<Symbol> symbols() const;

  // Replaces free occurrences of `variable` by the constant `object`.
  Formula substitute(const std::string& variable, const ObjectId& object) const;
  // Replaces free occurrences of `from` by the variable `to`.
  Formula rename(const std::string& from, const std::string& to) const;

  // Flattens nested top-level conjunctions.
  std::vector<Formula> conjuncts() const;

  // Checks that every GQ binds a variable not already bound by an enclosing
  // GQ and that atoms have at least one term.
  bool well_formed() const;

  std::string str() const;

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node);
  Formula replace(const std::string& variable, const Term& term) const;
  std::shared_ptr<const Node> node_;
};

// Parses the textual notation produced by Formula::str().
Formula parse_formula(std::string_view text);

using Assignment = std::map<std::string, ObjectId>;

// Objects that a referential expression denotes: each inner vector is one
// candidate denotation in model object order; an empty outer vector is a
// reference failure.
using Referent = std::vector<std::vector<ObjectId>>;

class DomainModel {
 public:
  DomainModel() = default;
  DomainModel(std::vector<ObjectId> objects, std::vector<Symbol> vocabulary);

  const std::vector<ObjectId>& objects() const noexcept { return objects_; }
  const std::vector<Symbol>& vocabulary() const noexcept { return vocabulary_; }

  std::optional<std::size_t> index_of(const ObjectId& id) const;
  std::optional<Symbol> symbol(const std::string& name) const;

  // Adds a tuple to the interpretation of `predicate`; throws EvalError on
  // unknown symbols, unknown objects or arity mismatch.
  void add(const std::string& predicate, const std::vector<ObjectId>& tuple);
  void add_symbol(const Symbol& symbol);

  bool holds(const std::string& predicate, const std::vector<std::size_t>& tuple) const;
  const std::set<std::vector<std::size_t>>& denotation(const std::string& predicate) const;

  // I restricted to the given objects (kept in model order).
  DomainModel restricted(const std::vector<ObjectId>& keep) const;

  friend bool operator==(const DomainModel&, const DomainModel&) = default;

 private:
  std::vector<ObjectId> objects_;
  std::vector<Symbol> vocabulary_;
  std::map<ObjectId, std::size_t> index_;
  std::map<std::string, std::set<std::vector<std::size_t>>> interpretation_;
};

// All ground atoms, vocabulary order × object order (object tuples in
// lexicographic index order for binary symbols).
std::vector<Formula> herbrand_base(const std::vector<ObjectId>& objects,
                                   const std::vector<Symbol>& vocabulary);

bool eval_formula(const DomainModel& model, const Assignment& g, const Formula& phi);
inline bool eval_formula(const DomainModel& model, const Formula& phi) {
  return eval_formula(model, Assignment{}, phi);
}

// σ(M, φ, x): the model restricted to objects satisfying φ[x/o].
DomainModel project_model(const DomainModel& model, const Formula& phi,
                          const std::string& variable);

// Logical form ⟨Q x. φ⟩ of a referential expression.
struct RefForm {
  Quantifier quantifier;
  std::string variable = "x";
  Formula restrictor;

  // The restrictor's only free variable is `variable`.
  bool well_formed() const;

  // The same form with the quantifier replaced.
  RefForm with_quantifier(Quantifier q) const { return {q, variable, restrictor}; }

  // "<_the_2_q x. grannysmith(x)>"
  std::string str() const;

  friend bool operator==(const RefForm&, const RefForm&) = default;
};

RefForm parse_refform(std::string_view text);

// ⟨Q⟩ applied to σ(M, φ, x).
Referent referent_of(const DomainModel& model, const RefForm& r);

}  // namespace secure
