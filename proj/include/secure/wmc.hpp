// Exact weighted model counting over a Herbrand base.
//
// Formulas are grounded into small boolean circuits (generalised quantifiers
// become cardinality gates), atoms are grouped into connected components by
// the top-level conjuncts that mention them, and each component is
// enumerated 64 models at a time, or counted object by object when it is
// wide but only couples objects through cardinality gates. Atoms whose weight is exactly 0 or 1 are
// folded into constants and never enumerated.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "secure/logic.hpp"

namespace secure {

// Index over herbrand_base(objects, vocabulary), in the same order.
class GroundBase {
 public:
  GroundBase() = default;
  GroundBase(std::vector<ObjectId> objects, std::vector<Symbol> vocabulary);

  std::size_t size() const noexcept { return size_; }
  const std::vector<ObjectId>& objects() const noexcept { return objects_; }
  const std::vector<Symbol>& vocabulary() const noexcept { return vocabulary_; }

  std::optional<std::size_t> symbol_index(std::string_view name) const;
  std::optional<std::size_t> object_index(std::string_view id) const;

  // Index of predicate(tuple) with tuple given as object indices.
  std::optional<std::size_t> index(std::string_view predicate, std::span<const std::size_t> tuple) const;
  // Index of a ground atom; throws EvalError for unknown symbols or objects.
  std::size_t index(const Formula& ground_atom) const;
  std::size_t unary_index(std::size_t symbol, std::size_t object) const;

  std::size_t symbol_of(std::size_t atom) const;
  std::vector<std::size_t> arguments(std::size_t atom) const;
  Formula atom(std::size_t i) const;
  std::string atom_name(std::size_t i) const;

  // The model whose true atoms are those set in `truth`.
  DomainModel model(const std::vector<bool>& truth) const;

  friend bool operator==(const GroundBase& a, const GroundBase& b) {
    return a.objects_ == b.objects_ && a.vocabulary_ == b.vocabulary_;
  }

 private:
  std::vector<ObjectId> objects_;
  std::vector<Symbol> vocabulary_;
  std::vector<std::size_t> offsets_;
  std::size_t size_ = 0;
};

// One Bernoulli weight per atom of a GroundBase, aligned by index.
using WeightMap = std::vector<double>;

struct WmcOptions {
  std::size_t max_coupled_atoms = 22;
  // Wider components are counted object by object when their conjuncts are
  // object-local or cardinality constraints over object-local inputs.
  std::size_t factoring_threshold = 16;
  // Off: every atom of the formula is enumerated as one component.
  bool factorize = true;
};

// Σ over models of φ of the product of atom weights; atoms outside φ sum out.
double wmc(const Formula& phi, const WeightMap& w, const GroundBase& base, const WmcOptions& opt = {});

// A theory Δ compiled against one weight map. Construction enumerates every
// component of Δ once; throws InconsistencyError when wmc(Δ) = 0.
class Conditioner {
 public:
  Conditioner(const GroundBase& base, const WeightMap& w, std::span<const Formula> theory,
              const WmcOptions& opt = {});
  ~Conditioner();
  Conditioner(Conditioner&&) noexcept;
  Conditioner& operator=(Conditioner&&) noexcept;

  // CON(φ | Δ) = wmc(φ ∧ Δ) / wmc(Δ).
  double probability(const Formula& phi) const;

  // P(a | Δ) for every atom of the base.
  const std::vector<double>& marginals() const;

  // Most probable complete assignment; ties favour the earliest atom false.
  const std::vector<bool>& map_assignment() const;
  DomainModel map_model() const;
  // CON(M̂ | Δ).
  double map_probability() const;

  // Largest number of atoms enumerated jointly.
  std::size_t widest_component() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace secure
