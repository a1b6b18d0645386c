#include "secure/belief.hpp"

#include <algorithm>
#include <cmath>

#include "secure/error.hpp"

namespace secure {

std::optional<std::size_t> BeliefState::symbol_index(std::string_view name) const {
  for (std::size_t i = 0; i < vocabulary.size(); ++i)
    if (vocabulary[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::size_t> BeliefState::unary_symbols() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vocabulary.size(); ++i)
    if (vocabulary[i].arity == 1 && !fixed[i]) out.push_back(i);
  return out;
}

BeliefState make_belief(std::vector<ObjectId> objects, std::vector<std::vector<double>> embeddings) {
  if (objects.size() != embeddings.size()) throw Error("one embedding per object is required");
  BeliefState b;
  b.objects = std::move(objects);
  b.embeddings = std::move(embeddings);
  b.base = GroundBase(b.objects, {});
  for (const auto& x : b.embeddings) b.support.push_back({x, {}});
  return b;
}

namespace {

void check_prior(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("prior weight must lie in [0, 1]");
}

}  // namespace

BeliefState add_neologism(const BeliefState& b, const Symbol& symbol, std::span<const double> priors,
                          const BeliefConfig& cfg) {
  if (b.knows(symbol.name)) return b;
  if (symbol.arity != 1) throw Error("neologisms are one-place predicates: " + symbol.name);
  if (priors.size() != b.objects.size()) throw Error("one prior per object is required");
  for (double p : priors) check_prior(p);

  BeliefState out = b;
  const double shared = priors.empty() ? cfg.default_prior : priors.front();
  const bool uniform = std::all_of(priors.begin(), priors.end(), [&](double p) { return p == shared; });
  out.vocabulary.push_back(symbol);
  out.fixed.push_back(false);
  out.symbol_prior.push_back(uniform ? shared : cfg.default_prior);
  out.base = GroundBase(out.objects, out.vocabulary);
  // The new symbol is last in the vocabulary, so its atoms are appended.
  for (double p : priors) {
    out.priors.push_back(p);
    out.grounded.push_back(p);
  }
  for (std::size_t o = 0; o < out.support.size(); ++o) out.support[o].y.push_back(priors[o]);
  for (auto& e : out.archive) e.y.push_back(out.symbol_prior.back());
  return refresh(out, cfg);
}

BeliefState add_neologism(const BeliefState& b, const Symbol& symbol, double prior, const BeliefConfig& cfg) {
  std::vector<double> priors(b.objects.size(), prior);
  return add_neologism(b, symbol, priors, cfg);
}

BeliefState set_relation(const BeliefState& b, const std::string& name,
                         const std::vector<std::pair<ObjectId, ObjectId>>& holds, const BeliefConfig& cfg) {
  BeliefState out = b;
  auto s = out.symbol_index(name);
  if (!s) {
    out.vocabulary.push_back({name, 2});
    out.fixed.push_back(true);
    out.symbol_prior.push_back(0.0);
    out.base = GroundBase(out.objects, out.vocabulary);
    const std::size_t added = out.base.size() - out.priors.size();
    out.priors.insert(out.priors.end(), added, 0.0);
    out.grounded.insert(out.grounded.end(), added, 0.0);
    for (auto& e : out.support) e.y.push_back(0.5);
    for (auto& e : out.archive) e.y.push_back(0.5);
    s = out.vocabulary.size() - 1;
  } else if (out.vocabulary[*s].arity != 2 || !out.fixed[*s]) {
    throw Error("'" + name + "' is not a relation symbol");
  }
  const std::size_t n = out.objects.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t tuple[2] = {i, j};
      const std::size_t a = *out.base.index(name, tuple);
      out.priors[a] = 0.0;
      out.grounded[a] = 0.0;
    }
  }
  for (const auto& [first, second] : holds) {
    auto i = out.base.object_index(first);
    auto j = out.base.object_index(second);
    if (!i || !j) throw Error("relation '" + name + "' mentions an unknown object");
    const std::size_t tuple[2] = {*i, *j};
    const std::size_t a = *out.base.index(name, tuple);
    out.priors[a] = 1.0;
    out.grounded[a] = 1.0;
  }
  (void)cfg;
  return out;
}

BeliefState refresh(const BeliefState& b, const BeliefConfig& cfg) {
  BeliefState out = b;
  const Conditioner cond(out.base, out.priors, out.theory, cfg.wmc);
  const auto& marginals = cond.marginals();
  const auto unary = out.unary_symbols();
  for (std::size_t o = 0; o < out.objects.size(); ++o)
    for (auto s : unary) out.support[o].y[s] = marginals[out.base.unary_index(s, o)];

  std::vector<SupportEntry> all = out.archive;
  all.insert(all.end(), out.support.begin(), out.support.end());
  for (auto s : unary) {
    const PrototypePair protos = compute_prototypes(all, build_supports(all, s, cfg.grounding), s);
    for (std::size_t o = 0; o < out.objects.size(); ++o)
      out.grounded[out.base.unary_index(s, o)] = predict(protos, out.embeddings[o], cfg.grounding);
  }
  return out;
}

BeliefState update_belief(const BeliefState& b, const Formula& phi, const BeliefConfig& cfg) {
  if (!phi.closed()) throw EvalError("only closed formulas can be asserted: " + phi.str());
  if (std::find(b.theory.begin(), b.theory.end(), phi) != b.theory.end()) return b;
  BeliefState out = b;
  out.theory.push_back(phi);
  return refresh(out, cfg);
}

BeliefState update_with_recovery(const BeliefState& b, const Formula& phi, const BeliefConfig& cfg,
                                 std::vector<Formula>* dropped) {
  try {
    return update_belief(b, phi, cfg);
  } catch (const InconsistencyError&) {
  }
  auto attempt = [&](std::vector<Formula> theory) -> std::optional<BeliefState> {
    BeliefState candidate = b;
    candidate.theory = std::move(theory);
    candidate.theory.push_back(phi);
    try {
      return refresh(candidate, cfg);
    } catch (const InconsistencyError&) {
      return std::nullopt;
    }
  };
  // The oldest single formula whose removal restores consistency.
  for (std::size_t i = 0; i < b.theory.size(); ++i) {
    std::vector<Formula> theory = b.theory;
    theory.erase(theory.begin() + static_cast<std::ptrdiff_t>(i));
    if (auto fixed = attempt(theory)) {
      if (dropped) dropped->push_back(b.theory[i]);
      return *fixed;
    }
  }
  for (std::size_t k = 2; k <= b.theory.size(); ++k) {
    std::vector<Formula> theory(b.theory.begin() + static_cast<std::ptrdiff_t>(k), b.theory.end());
    if (auto fixed = attempt(theory)) {
      if (dropped) dropped->insert(dropped->end(), b.theory.begin(), b.theory.begin() + static_cast<std::ptrdiff_t>(k));
      return *fixed;
    }
  }
  throw InconsistencyError("formula is unsatisfiable on its own: " + phi.str(), b.theory.size());
}

BeliefState change_scene(const BeliefState& b, std::vector<ObjectId> objects,
                         std::vector<std::vector<double>> embeddings, const BeliefConfig& cfg) {
  if (objects.size() != embeddings.size()) throw Error("one embedding per object is required");
  BeliefState out;
  out.archive = b.archive;
  out.archive.insert(out.archive.end(), b.support.begin(), b.support.end());
  out.objects = std::move(objects);
  out.embeddings = std::move(embeddings);
  out.vocabulary = b.vocabulary;
  out.fixed = b.fixed;
  out.symbol_prior = b.symbol_prior;
  out.base = GroundBase(out.objects, out.vocabulary);
  out.priors.assign(out.base.size(), 0.0);
  for (std::size_t s = 0; s < out.vocabulary.size(); ++s) {
    if (out.fixed[s]) continue;
    for (std::size_t o = 0; o < out.objects.size(); ++o)
      out.priors[out.base.unary_index(s, o)] = out.symbol_prior[s];
  }
  out.grounded = out.priors;
  for (const auto& x : out.embeddings) {
    SupportEntry e{x, std::vector<double>(out.vocabulary.size(), 0.5)};
    for (std::size_t s = 0; s < out.vocabulary.size(); ++s)
      if (!out.fixed[s]) e.y[s] = out.symbol_prior[s];
    out.support.push_back(std::move(e));
  }
  return refresh(out, cfg);
}

double belief_entropy(const BeliefState& b) {
  double h = 0.0;
  for (double w : b.grounded) h += binary_entropy(w);
  return h;
}

Conditioner grounded_conditioner(const BeliefState& b, const BeliefConfig& cfg) {
  return Conditioner(b.base, b.grounded, b.theory, cfg.wmc);
}

Conditioner prior_conditioner(const BeliefState& b, const BeliefConfig& cfg) {
  return Conditioner(b.base, b.priors, b.theory, cfg.wmc);
}

DomainModel map_model(const BeliefState& b, const BeliefConfig& cfg) {
  return grounded_conditioner(b, cfg).map_model();
}

double con(const Formula& phi, const BeliefState& b, const WeightMap& w, const BeliefConfig& cfg) {
  return Conditioner(b.base, w, b.theory, cfg.wmc).probability(phi);
}

nlohmann::json belief_snapshot(const BeliefState& b) {
  nlohmann::json j;
  j["objects"] = b.objects;
  j["vocabulary"] = nlohmann::json::array();
  for (std::size_t s = 0; s < b.vocabulary.size(); ++s)
    j["vocabulary"].push_back(
        {{"name", b.vocabulary[s].name}, {"arity", b.vocabulary[s].arity}, {"fixed", static_cast<bool>(b.fixed[s])}});
  j["theory"] = nlohmann::json::array();
  for (const auto& f : b.theory) j["theory"].push_back(f.str());
  nlohmann::json prior = nlohmann::json::object();
  nlohmann::json grounded = nlohmann::json::object();
  for (std::size_t a = 0; a < b.base.size(); ++a) {
    if (b.fixed[b.base.symbol_of(a)]) continue;
    const std::string name = b.base.atom_name(a);
    prior[name] = b.priors[a];
    grounded[name] = b.grounded[a];
  }
  j["prior_weights"] = std::move(prior);
  j["grounded_weights"] = std::move(grounded);
  j["support_size"] = b.support.size() + b.archive.size();
  j["entropy"] = belief_entropy(b);
  return j;
}

}  // namespace secure
