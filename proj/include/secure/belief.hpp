// The agent's epistemic state and its update rule.
//
// A BeliefState is a plain value: every operation here returns a new state.
// Unary symbols are grounded from embeddings; symbols marked fixed (spatial
// relations) take their 0/1 interpretation from the scene.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "secure/grounding.hpp"
#include "secure/logic.hpp"
#include "secure/wmc.hpp"

#include <json.hpp>

namespace secure {

struct BeliefConfig {
  GroundingConfig grounding;
  WmcOptions wmc;
  double default_prior = 0.5;
};

struct BeliefState {
  std::vector<ObjectId> objects;
  std::vector<std::vector<double>> embeddings;  // one per object
  std::vector<Symbol> vocabulary;
  std::vector<bool> fixed;                      // per symbol
  std::vector<double> symbol_prior;             // weight given to new atoms of each symbol
  GroundBase base;
  std::vector<Formula> theory;                  // Δ in insertion order, no duplicates
  WeightMap priors;                             // w_p
  WeightMap grounded;                           // w_g
  std::vector<SupportEntry> support;            // current scene, aligned with objects
  std::vector<SupportEntry> archive;            // exemplars kept from earlier scenes

  std::optional<std::size_t> symbol_index(std::string_view name) const;
  bool knows(std::string_view name) const { return symbol_index(name).has_value(); }
  std::vector<std::size_t> unary_symbols() const;
};

// Fresh state for a scene with no vocabulary.
BeliefState make_belief(std::vector<ObjectId> objects, std::vector<std::vector<double>> embeddings);

// Extends the vocabulary with a unary symbol; every new atom gets `prior`.
// Adding a known symbol returns the state unchanged.
BeliefState add_neologism(const BeliefState& b, const Symbol& symbol, double prior, const BeliefConfig& cfg);
// Same, with one prior per object.
BeliefState add_neologism(const BeliefState& b, const Symbol& symbol, std::span<const double> priors,
                          const BeliefConfig& cfg);

// Declares a binary relation whose interpretation is known exactly.
BeliefState set_relation(const BeliefState& b, const std::string& name,
                         const std::vector<std::pair<ObjectId, ObjectId>>& holds, const BeliefConfig& cfg);

// Δ ∪ {φ}, support labels from CON under w_p, then w_g from the grounding
// model. Throws InconsistencyError when the new theory has zero count.
BeliefState update_belief(const BeliefState& b, const Formula& phi, const BeliefConfig& cfg);

// Rebuilds support labels and grounded weights from the current Δ.
BeliefState refresh(const BeliefState& b, const BeliefConfig& cfg);

// Moves the current support into the archive and replaces the scene.
// Δ is cleared; vocabulary, symbol priors and the archive carry over.
// Fixed relations must be set again for the new objects.
BeliefState change_scene(const BeliefState& b, std::vector<ObjectId> objects,
                         std::vector<std::vector<double>> embeddings, const BeliefConfig& cfg);

// Recovery for a contradicted theory: adds φ, dropping the oldest earlier
// formulas until Δ is consistent again. Dropped formulas are reported.
BeliefState update_with_recovery(const BeliefState& b, const Formula& phi, const BeliefConfig& cfg,
                                 std::vector<Formula>* dropped);

// Σ H(Bern(w_g(a))) over the Herbrand base, nats.
double belief_entropy(const BeliefState& b);

// Δ conditioned on w_g (or w_p).
Conditioner grounded_conditioner(const BeliefState& b, const BeliefConfig& cfg);
Conditioner prior_conditioner(const BeliefState& b, const BeliefConfig& cfg);

DomainModel map_model(const BeliefState& b, const BeliefConfig& cfg);
double con(const Formula& phi, const BeliefState& b, const WeightMap& w, const BeliefConfig& cfg);

// Structured snapshot: objects, vocabulary, Δ as formula strings and the
// weight tables keyed by atom.
nlohmann::json belief_snapshot(const BeliefState& b);

}  // namespace secure
