#include "secure/wmc.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include "secure/error.hpp"

namespace secure {

// ---------------------------------------------------------------------------
// GroundBase

GroundBase::GroundBase(std::vector<ObjectId> objects, std::vector<Symbol> vocabulary)
    : objects_(std::move(objects)), vocabulary_(std::move(vocabulary)) {
  const std::size_t n = objects_.size();
  for (const auto& s : vocabulary_) {
    if (s.arity < 1 || s.arity > 2) throw EvalError("symbol '" + s.name + "' has unsupported arity");
    offsets_.push_back(size_);
    size_ += s.arity == 1 ? n : n * n;
  }
}

std::optional<std::size_t> GroundBase::symbol_index(std::string_view name) const {
  for (std::size_t i = 0; i < vocabulary_.size(); ++i)
    if (vocabulary_[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> GroundBase::object_index(std::string_view id) const {
  for (std::size_t i = 0; i < objects_.size(); ++i)
    if (objects_[i] == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> GroundBase::index(std::string_view predicate,
                                             std::span<const std::size_t> tuple) const {
  auto s = symbol_index(predicate);
  if (!s || static_cast<std::size_t>(vocabulary_[*s].arity) != tuple.size()) return std::nullopt;
  const std::size_t n = objects_.size();
  for (auto t : tuple)
    if (t >= n) return std::nullopt;
  return tuple.size() == 1 ? offsets_[*s] + tuple[0] : offsets_[*s] + tuple[0] * n + tuple[1];
}

std::size_t GroundBase::index(const Formula& ground_atom) const {
  if (ground_atom.kind() != Formula::Kind::atom) throw EvalError("not an atom: " + ground_atom.str());
  std::vector<std::size_t> tuple;
  for (const auto& t : ground_atom.terms()) {
    if (t.kind != Term::Kind::constant) throw EvalError("atom is not ground: " + ground_atom.str());
    auto o = object_index(t.id);
    if (!o) throw EvalError("unknown object '" + t.id + "'");
    tuple.push_back(*o);
  }
  auto i = index(ground_atom.predicate(), tuple);
  if (!i) throw EvalError("unknown symbol '" + ground_atom.predicate() + "'");
  return *i;
}

std::size_t GroundBase::unary_index(std::size_t symbol, std::size_t object) const {
  return offsets_.at(symbol) + object;
}

std::size_t GroundBase::symbol_of(std::size_t atom) const {
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), atom);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

std::vector<std::size_t> GroundBase::arguments(std::size_t atom) const {
  const std::size_t s = symbol_of(atom);
  const std::size_t local = atom - offsets_[s];
  if (vocabulary_[s].arity == 1) return {local};
  const std::size_t n = objects_.size();
  return {local / n, local % n};
}

Formula GroundBase::atom(std::size_t i) const {
  std::vector<Term> terms;
  for (auto a : arguments(i)) terms.push_back(Term::constant(objects_[a]));
  return Formula::atom(vocabulary_[symbol_of(i)].name, std::move(terms));
}

std::string GroundBase::atom_name(std::size_t i) const { return atom(i).str(); }

DomainModel GroundBase::model(const std::vector<bool>& truth) const {
  DomainModel m(objects_, vocabulary_);
  for (std::size_t i = 0; i < size_ && i < truth.size(); ++i) {
    if (!truth[i]) continue;
    std::vector<ObjectId> ids;
    for (auto a : arguments(i)) ids.push_back(objects_[a]);
    m.add(vocabulary_[symbol_of(i)].name, ids);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Circuits

namespace {

constexpr std::uint32_t kFalseGate = 0;
constexpr std::uint32_t kTrueGate = 1;

struct Gate {
  enum class Op : std::uint8_t { constant, var, negation, conjunction, disjunction, equivalence, card };
  Op op = Op::constant;
  std::uint32_t var = 0;
  std::vector<std::uint32_t> kids{};  // card: r0, rb0, r1, rb1, ...
  std::vector<std::pair<std::uint16_t, std::uint16_t>> accept{};  // (|R|, |R∩B|)
  std::uint16_t width = 0;  // counter bits
  std::uint16_t limit = 0;  // largest count
};

struct Circuit {
  std::vector<Gate> gates;
  std::uint32_t root = kTrueGate;
  std::vector<std::size_t> atoms;  // global indices of var gates, sorted

  Circuit() {
    gates.push_back({Gate::Op::constant});
    gates.push_back({Gate::Op::constant});
  }
};

class Compiler {
 public:
  Compiler(const GroundBase& base, const WeightMap& w) : base_(base), w_(w) {}

  Circuit compile(const Formula& f) {
    circuit_ = Circuit{};
    vars_.clear();
    env_.clear();
    circuit_.root = build(f);
    std::vector<std::size_t> atoms;
    for (const auto& [atom, gate] : vars_) atoms.push_back(atom);
    circuit_.atoms = std::move(atoms);
    return std::move(circuit_);
  }

 private:
  std::uint32_t add(Gate g) {
    circuit_.gates.push_back(std::move(g));
    return static_cast<std::uint32_t>(circuit_.gates.size() - 1);
  }

  static bool constant(std::uint32_t g) { return g == kFalseGate || g == kTrueGate; }

  std::uint32_t negate(std::uint32_t a) {
    if (a == kFalseGate) return kTrueGate;
    if (a == kTrueGate) return kFalseGate;
    if (circuit_.gates[a].op == Gate::Op::negation) return circuit_.gates[a].kids[0];
    return add({Gate::Op::negation, 0, {a}});
  }

  std::uint32_t both(std::uint32_t a, std::uint32_t b) {
    if (a == kFalseGate || b == kFalseGate) return kFalseGate;
    if (a == kTrueGate) return b;
    if (b == kTrueGate || a == b) return a;
    return add({Gate::Op::conjunction, 0, {a, b}});
  }

  std::uint32_t either(std::uint32_t a, std::uint32_t b) {
    if (a == kTrueGate || b == kTrueGate) return kTrueGate;
    if (a == kFalseGate) return b;
    if (b == kFalseGate || a == b) return a;
    return add({Gate::Op::disjunction, 0, {a, b}});
  }

  std::uint32_t same(std::uint32_t a, std::uint32_t b) {
    if (a == kTrueGate) return b;
    if (b == kTrueGate) return a;
    if (a == kFalseGate) return negate(b);
    if (b == kFalseGate) return negate(a);
    if (a == b) return kTrueGate;
    return add({Gate::Op::equivalence, 0, {a, b}});
  }

  std::uint32_t atom(const Formula& f) {
    std::vector<std::size_t> tuple;
    for (const auto& t : f.terms()) {
      if (t.kind == Term::Kind::variable) {
        auto it = env_.find(t.id);
        if (it == env_.end()) throw EvalError("unbound variable '" + t.id + "'");
        tuple.push_back(it->second);
      } else {
        auto o = base_.object_index(t.id);
        if (!o) throw EvalError("unknown object '" + t.id + "'");
        tuple.push_back(*o);
      }
    }
    auto i = base_.index(f.predicate(), tuple);
    if (!i) throw EvalError("unknown symbol '" + f.predicate() + "'");
    const double w = w_.at(*i);
    if (w <= 0.0) return kFalseGate;
    if (w >= 1.0) return kTrueGate;
    auto [it, fresh] = vars_.try_emplace(*i, 0);
    if (fresh) it->second = add({Gate::Op::var, static_cast<std::uint32_t>(*i)});
    return it->second;
  }

  std::uint32_t quantified(const Formula& f) {
    const Quantifier q = f.quantifier();
    const std::string& x = f.variable();
    std::optional<std::size_t> saved;
    if (auto it = env_.find(x); it != env_.end()) saved = it->second;

    std::vector<std::uint32_t> kids;
    std::size_t fixed_r = 0;
    std::size_t fixed_rb = 0;
    bool dynamic = false;
    for (std::size_t o = 0; o < base_.objects().size(); ++o) {
      env_[x] = o;
      const std::uint32_t r = build(f.restrictor());
      if (r == kFalseGate) continue;
      const std::uint32_t rb = both(r, build(f.body()));
      if (constant(r) && constant(rb)) {
        fixed_r += r == kTrueGate;
        fixed_rb += rb == kTrueGate;
      } else {
        dynamic = true;
      }
      kids.push_back(r);
      kids.push_back(rb);
    }
    if (saved)
      env_[x] = *saved;
    else
      env_.erase(x);

    if (!dynamic) return q.holds(fixed_r, fixed_rb) ? kTrueGate : kFalseGate;

    Gate g{Gate::Op::card};
    const std::size_t limit = kids.size() / 2;
    g.limit = static_cast<std::uint16_t>(limit);
    g.width = static_cast<std::uint16_t>(std::bit_width(limit));
    for (std::size_t r = 0; r <= limit; ++r)
      for (std::size_t o = 0; o <= r; ++o)
        if (q.holds(r, o)) g.accept.emplace_back(static_cast<std::uint16_t>(r), static_cast<std::uint16_t>(o));
    if (g.accept.empty()) return kFalseGate;
    g.kids = std::move(kids);
    return add(std::move(g));
  }

  std::uint32_t build(const Formula& f) {
    switch (f.kind()) {
      case Formula::Kind::truth:
        return kTrueGate;
      case Formula::Kind::falsity:
        return kFalseGate;
      case Formula::Kind::atom:
        return atom(f);
      case Formula::Kind::negation:
        return negate(build(f.operand()));
      case Formula::Kind::conjunction: {
        const std::uint32_t a = build(f.lhs());
        if (a == kFalseGate) return kFalseGate;
        return both(a, build(f.rhs()));
      }
      case Formula::Kind::disjunction: {
        const std::uint32_t a = build(f.lhs());
        if (a == kTrueGate) return kTrueGate;
        return either(a, build(f.rhs()));
      }
      case Formula::Kind::implication: {
        const std::uint32_t a = build(f.lhs());
        if (a == kFalseGate) return kTrueGate;
        return either(negate(a), build(f.rhs()));
      }
      case Formula::Kind::biconditional:
        return same(build(f.lhs()), build(f.rhs()));
      case Formula::Kind::quantified:
        return quantified(f);
    }
    return kFalseGate;
  }

  const GroundBase& base_;
  const WeightMap& w_;
  Circuit circuit_;
  std::map<std::size_t, std::uint32_t> vars_;
  std::map<std::string, std::size_t> env_;
};

// Several circuits joined under one conjunction, with var gates renumbered to
// positions in the sorted union of their atoms.
Circuit merge(const std::vector<const Circuit*>& parts) {
  Circuit out;
  for (const auto* c : parts) out.atoms.insert(out.atoms.end(), c->atoms.begin(), c->atoms.end());
  std::sort(out.atoms.begin(), out.atoms.end());
  out.atoms.erase(std::unique(out.atoms.begin(), out.atoms.end()), out.atoms.end());

  std::vector<std::uint32_t> roots;
  for (const auto* c : parts) {
    const auto offset = static_cast<std::uint32_t>(out.gates.size()) - 2;
    auto remap = [&](std::uint32_t g) { return g < 2 ? g : g + offset; };
    for (std::size_t i = 2; i < c->gates.size(); ++i) {
      Gate g = c->gates[i];
      for (auto& k : g.kids) k = remap(k);
      if (g.op == Gate::Op::var) {
        auto pos = std::lower_bound(out.atoms.begin(), out.atoms.end(), g.var);
        g.var = static_cast<std::uint32_t>(pos - out.atoms.begin());
      }
      out.gates.push_back(std::move(g));
    }
    roots.push_back(remap(c->root));
  }
  if (std::find(roots.begin(), roots.end(), kFalseGate) != roots.end()) {
    out.root = kFalseGate;
    return out;
  }
  roots.erase(std::remove(roots.begin(), roots.end(), kTrueGate), roots.end());
  if (roots.empty()) {
    out.root = kTrueGate;
  } else if (roots.size() == 1) {
    out.root = roots[0];
  } else {
    Gate g{Gate::Op::conjunction};
    g.kids = roots;
    out.gates.push_back(std::move(g));
    out.root = static_cast<std::uint32_t>(out.gates.size() - 1);
  }
  return out;
}

constexpr std::array<std::uint64_t, 6> kLanePattern{
    0xAAAAAAAAAAAAAAAAull, 0xCCCCCCCCCCCCCCCCull, 0xF0F0F0F0F0F0F0F0ull,
    0xFF00FF00FF00FF00ull, 0xFFFF0000FFFF0000ull, 0xFFFFFFFF00000000ull,
};

struct Enumeration {
  double z = 0.0;
  std::vector<double> true_mass;  // unnormalised, per local atom
  std::vector<bool> best;         // per local atom
  double best_weight = -1.0;
};

bool lex_before(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t diff = a ^ b;
  if (diff == 0) return false;
  const std::uint64_t low = diff & (~diff + 1);
  return (a & low) == 0;
}

Enumeration enumerate_all(const Circuit& c, const WeightMap& w, const WmcOptions& opt) {
  const std::size_t k = c.atoms.size();
  if (k > opt.max_coupled_atoms)
    throw CapacityError("enumeration would couple " + std::to_string(k) + " atoms (cap " +
                        std::to_string(opt.max_coupled_atoms) + ")");
  Enumeration e;
  e.true_mass.assign(k, 0.0);
  e.best.assign(k, false);
  if (c.root == kFalseGate) return e;
  std::uint64_t best = 0;

  const std::size_t low_bits = std::min<std::size_t>(k, 6);
  const std::size_t lanes = std::size_t{1} << low_bits;
  const std::uint64_t valid = lanes == 64 ? ~0ull : ((1ull << lanes) - 1);
  const std::uint64_t blocks = k > 6 ? (1ull << (k - 6)) : 1;

  std::array<double, 64> lane_weight{};
  for (std::size_t l = 0; l < lanes; ++l) {
    double p = 1.0;
    for (std::size_t j = 0; j < low_bits; ++j) {
      const double wj = w[c.atoms[j]];
      p *= ((l >> j) & 1) ? wj : 1.0 - wj;
    }
    lane_weight[l] = p;
  }

  std::vector<std::uint64_t> val(c.gates.size(), 0);
  val[kFalseGate] = 0;
  val[kTrueGate] = ~0ull;
  std::vector<std::uint64_t> r_count;
  std::vector<std::uint64_t> o_count;
  std::vector<std::uint64_t> eq_r;
  std::vector<std::uint64_t> eq_o;
  std::array<double, 6> low_mass{};

  auto add_bit = [](std::vector<std::uint64_t>& counter, std::uint64_t carry) {
    for (auto& bit : counter) {
      const std::uint64_t t = bit & carry;
      bit ^= carry;
      carry = t;
      if (!carry) break;
    }
  };
  auto equal_masks = [](const std::vector<std::uint64_t>& counter, std::size_t limit,
                        std::vector<std::uint64_t>& out) {
    out.assign(limit + 1, ~0ull);
    for (std::size_t v = 0; v <= limit; ++v)
      for (std::size_t b = 0; b < counter.size(); ++b) out[v] &= ((v >> b) & 1) ? counter[b] : ~counter[b];
  };

  for (std::uint64_t block = 0; block < blocks; ++block) {
    for (std::size_t i = 2; i < c.gates.size(); ++i) {
      const Gate& g = c.gates[i];
      switch (g.op) {
        case Gate::Op::constant:
          break;
        case Gate::Op::var:
          val[i] = g.var < 6 ? kLanePattern[g.var] : (((block >> (g.var - 6)) & 1) ? ~0ull : 0ull);
          break;
        case Gate::Op::negation:
          val[i] = ~val[g.kids[0]];
          break;
        case Gate::Op::conjunction: {
          std::uint64_t v = ~0ull;
          for (auto k2 : g.kids) v &= val[k2];
          val[i] = v;
          break;
        }
        case Gate::Op::disjunction: {
          std::uint64_t v = 0;
          for (auto k2 : g.kids) v |= val[k2];
          val[i] = v;
          break;
        }
        case Gate::Op::equivalence:
          val[i] = ~(val[g.kids[0]] ^ val[g.kids[1]]);
          break;
        case Gate::Op::card: {
          r_count.assign(g.width, 0);
          o_count.assign(g.width, 0);
          for (std::size_t p = 0; p < g.kids.size(); p += 2) {
            add_bit(r_count, val[g.kids[p]]);
            add_bit(o_count, val[g.kids[p + 1]]);
          }
          equal_masks(r_count, g.limit, eq_r);
          equal_masks(o_count, g.limit, eq_o);
          std::uint64_t v = 0;
          for (auto [r, o] : g.accept) v |= eq_r[r] & eq_o[o];
          val[i] = v;
          break;
        }
      }
    }
    std::uint64_t sat = val[c.root] & valid;
    if (!sat) continue;

    double high = 1.0;
    for (std::size_t j = 6; j < k; ++j) {
      const double wj = w[c.atoms[j]];
      high *= ((block >> (j - 6)) & 1) ? wj : 1.0 - wj;
    }
    if (high == 0.0) continue;

    double block_mass = 0.0;
    low_mass.fill(0.0);
    while (sat) {
      const int lane = std::countr_zero(sat);
      sat &= sat - 1;
      const double lw = lane_weight[lane];
      block_mass += lw;
      for (std::size_t j = 0; j < low_bits; ++j)
        if ((lane >> j) & 1) low_mass[j] += lw;
      const double weight = lw * high;
      const std::uint64_t assignment = (block << 6) | static_cast<std::uint64_t>(lane);
      const bool better = weight > e.best_weight * (1.0 + 1e-12);
      const bool tie = !better && weight >= e.best_weight * (1.0 - 1e-12);
      if (e.best_weight < 0.0 || better || (tie && lex_before(assignment, best))) {
        best = assignment;
        e.best_weight = weight;
      }
    }
    e.z += block_mass * high;
    for (std::size_t j = 0; j < low_bits; ++j) e.true_mass[j] += low_mass[j] * high;
    for (std::size_t j = 6; j < k; ++j)
      if ((block >> (j - 6)) & 1) e.true_mass[j] += block_mass * high;
  }
  for (std::size_t j = 0; j < k; ++j) e.best[j] = (best >> j) & 1;
  return e;
}

// Components whose top-level conjuncts each mention one object's atoms, or
// are cardinality gates whose inputs each mention one object's atoms, are
// counted by dynamic programming over objects. The state is the vector of
// (|R|, |R∩B|) counters of the cardinality gates.
class ObjectFactoring {
 public:
  ObjectFactoring(const Circuit& c, const WeightMap& w, const GroundBase& base, const WmcOptions& opt)
      : c_(c), w_(w), opt_(opt) {
    k_ = c.atoms.size();
    applicable_ = analyse(base);
  }

  bool applicable() const noexcept { return applicable_; }

  Enumeration run() {
    Enumeration e;
    e.true_mass.assign(k_, 0.0);
    e.best.assign(k_, false);
    std::vector<std::int8_t> clamp(k_, -1);
    const Totals all = solve(clamp);
    e.z = all.sum;
    if (all.sum <= 0.0) return e;
    for (std::size_t j = 0; j < k_; ++j) {
      clamp[j] = 1;
      e.true_mass[j] = solve(clamp).sum;
      clamp[j] = -1;
    }
    // Lexicographically first optimum: fix atoms in order, preferring false.
    for (std::size_t j = 0; j < k_; ++j) {
      clamp[j] = 0;
      if (solve(clamp).max >= all.max * (1.0 - 1e-12)) continue;
      clamp[j] = 1;
    }
    for (std::size_t j = 0; j < k_; ++j) e.best[j] = clamp[j] == 1;
    e.best_weight = all.max;
    return e;
  }

 private:
  struct Counter {
    std::uint32_t gate = 0;
    bool negated = false;
    std::size_t limit = 0;
    std::size_t r_stride = 0;
    std::size_t o_stride = 0;
  };
  struct Totals {
    double sum = 0.0;
    double max = 0.0;
  };

  bool analyse(const GroundBase& base) {
    if (c_.root == kFalseGate || c_.root == kTrueGate) return false;
    const std::size_t n = base.objects().size();
    if (n == 0 || n > 64) return false;
    object_of_.resize(k_);
    for (std::size_t j = 0; j < k_; ++j) {
      const auto args = base.arguments(c_.atoms[j]);
      if (args.size() != 1) return false;
      object_of_[j] = args[0];
    }
    // Objects mentioned below each gate.
    mask_.assign(c_.gates.size(), 0);
    for (std::size_t i = 2; i < c_.gates.size(); ++i) {
      const Gate& g = c_.gates[i];
      if (g.op == Gate::Op::var)
        mask_[i] = 1ull << object_of_[g.var];
      else
        for (auto kid : g.kids) mask_[i] |= mask_[kid];
    }
    std::vector<std::uint32_t> factors;
    std::vector<std::uint32_t> stack{c_.root};
    while (!stack.empty()) {
      const std::uint32_t g = stack.back();
      stack.pop_back();
      if (c_.gates[g].op == Gate::Op::conjunction)
        for (auto kid : c_.gates[g].kids) stack.push_back(kid);
      else
        factors.push_back(g);
    }
    std::size_t states = 1;
    for (auto f : factors) {
      if (std::popcount(mask_[f]) <= 1) {
        local_.push_back(f);
        continue;
      }
      bool negated = false;
      std::uint32_t g = f;
      if (c_.gates[g].op == Gate::Op::negation) {
        negated = true;
        g = c_.gates[g].kids[0];
      }
      if (c_.gates[g].op != Gate::Op::card) return false;
      for (auto kid : c_.gates[g].kids)
        if (std::popcount(mask_[kid]) > 1) return false;
      Counter counter{g, negated, c_.gates[g].limit, 0, 0};
      counter.r_stride = states;
      states *= counter.limit + 1;
      counter.o_stride = states;
      states *= counter.limit + 1;
      if (states > (std::size_t{1} << 22)) return false;
      counters_.push_back(counter);
    }
    states_ = states;
    for (std::size_t j = 0; j < k_; ++j) vars_of_[object_of_[j]].push_back(j);
    for (const auto& [object, vars] : vars_of_)
      if (vars.size() > opt_.max_coupled_atoms) return false;
    return true;
  }

  void evaluate(std::vector<std::uint8_t>& val, const std::vector<std::uint8_t>& var_value) const {
    val[kFalseGate] = 0;
    val[kTrueGate] = 1;
    for (std::size_t i = 2; i < c_.gates.size(); ++i) {
      const Gate& g = c_.gates[i];
      switch (g.op) {
        case Gate::Op::constant:
          val[i] = 0;
          break;
        case Gate::Op::var:
          val[i] = var_value[g.var];
          break;
        case Gate::Op::negation:
          val[i] = !val[g.kids[0]];
          break;
        case Gate::Op::conjunction: {
          std::uint8_t v = 1;
          for (auto kid : g.kids) v &= val[kid];
          val[i] = v;
          break;
        }
        case Gate::Op::disjunction: {
          std::uint8_t v = 0;
          for (auto kid : g.kids) v |= val[kid];
          val[i] = v;
          break;
        }
        case Gate::Op::equivalence:
          val[i] = val[g.kids[0]] == val[g.kids[1]];
          break;
        case Gate::Op::card: {
          std::uint16_t r = 0, o = 0;
          for (std::size_t p = 0; p < g.kids.size(); p += 2) {
            r += val[g.kids[p]];
            o += val[g.kids[p + 1]];
          }
          std::uint8_t v = 0;
          for (auto [ar, ao] : g.accept)
            if (ar == r && ao == o) v = 1;
          val[i] = v;
          break;
        }
      }
    }
  }

  // Counter increments contributed by gates whose inputs mention `mask`
  // (0: constant inputs).
  std::size_t delta(const std::vector<std::uint8_t>& val, std::uint64_t mask) const {
    std::size_t d = 0;
    for (const auto& counter : counters_) {
      const Gate& g = c_.gates[counter.gate];
      for (std::size_t p = 0; p < g.kids.size(); p += 2) {
        if (mask_[g.kids[p]] == mask && val[g.kids[p]]) d += counter.r_stride;
        if (mask_[g.kids[p + 1]] == mask && val[g.kids[p + 1]]) d += counter.o_stride;
      }
    }
    return d;
  }

  Totals solve(const std::vector<std::int8_t>& clamp) const {
    std::vector<std::uint8_t> var_value(k_, 0);
    std::vector<std::uint8_t> val(c_.gates.size(), 0);
    evaluate(val, var_value);
    std::vector<double> sum(states_, 0.0), best(states_, 0.0);
    const std::size_t start = delta(val, 0);
    sum[start] = 1.0;
    best[start] = 1.0;

    for (const auto& [object, vars] : vars_of_) {
      const std::uint64_t mask = 1ull << object;
      std::map<std::size_t, Totals> message;
      const std::size_t m = vars.size();
      for (std::uint64_t bits = 0; bits < (1ull << m); ++bits) {
        double weight = 1.0;
        bool allowed = true;
        for (std::size_t t = 0; t < m; ++t) {
          const std::uint8_t v = (bits >> t) & 1;
          const std::size_t j = vars[t];
          if (clamp[j] >= 0 && clamp[j] != v) {
            allowed = false;
            break;
          }
          var_value[j] = v;
          const double wj = w_[c_.atoms[j]];
          weight *= v ? wj : 1.0 - wj;
        }
        if (!allowed || weight == 0.0) continue;
        evaluate(val, var_value);
        bool ok = true;
        for (auto f : local_)
          if (mask_[f] == mask && !val[f]) ok = false;
        if (!ok) continue;
        Totals& t = message[delta(val, mask)];
        t.sum += weight;
        t.max = std::max(t.max, weight);
      }
      for (auto j : vars) var_value[j] = 0;
      std::vector<double> next_sum(states_, 0.0), next_best(states_, 0.0);
      for (std::size_t s = 0; s < states_; ++s) {
        if (sum[s] == 0.0) continue;
        for (const auto& [d, t] : message) {
          const std::size_t to = s + d;
          if (to >= states_) continue;
          next_sum[to] += sum[s] * t.sum;
          next_best[to] = std::max(next_best[to], best[s] * t.max);
        }
      }
      sum.swap(next_sum);
      best.swap(next_best);
    }

    Totals out;
    for (std::size_t s = 0; s < states_; ++s) {
      if (sum[s] == 0.0) continue;
      bool accepted = true;
      for (const auto& counter : counters_) {
        const std::size_t r = (s / counter.r_stride) % (counter.limit + 1);
        const std::size_t o = (s / counter.o_stride) % (counter.limit + 1);
        bool holds = false;
        for (auto [ar, ao] : c_.gates[counter.gate].accept)
          if (ar == r && ao == o) holds = true;
        if (holds == counter.negated) accepted = false;
      }
      if (!accepted) continue;
      out.sum += sum[s];
      out.max = std::max(out.max, best[s]);
    }
    return out;
  }

  const Circuit& c_;
  const WeightMap& w_;
  const WmcOptions& opt_;
  std::size_t k_ = 0;
  bool applicable_ = false;
  std::vector<std::size_t> object_of_;
  std::vector<std::uint64_t> mask_;
  std::vector<std::uint32_t> local_;
  std::vector<Counter> counters_;
  std::size_t states_ = 1;
  std::map<std::size_t, std::vector<std::size_t>> vars_of_;
};

Enumeration enumerate(const Circuit& c, const WeightMap& w, const GroundBase& base, const WmcOptions& opt) {
  if (c.atoms.size() > opt.factoring_threshold) {
    ObjectFactoring f(c, w, base, opt);
    if (f.applicable()) return f.run();
  }
  return enumerate_all(c, w, opt);
}

struct Conjunct {
  Circuit circuit;
  std::size_t origin = 0;
};

class UnionFind {
 public:
  std::size_t find(std::size_t a) {
    auto it = parent_.find(a);
    if (it == parent_.end()) {
      parent_[a] = a;
      return a;
    }
    if (it->second == a) return a;
    const std::size_t root = find(it->second);
    parent_[a] = root;
    return root;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::map<std::size_t, std::size_t> parent_;
};

// Groups conjuncts that share atoms. Conjuncts without atoms are dropped.
std::vector<std::vector<std::size_t>> group(const std::vector<const Circuit*>& parts, bool factorize) {
  UnionFind uf;
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  std::optional<std::size_t> anchor;
  for (const auto* c : parts) {
    for (std::size_t j = 1; j < c->atoms.size(); ++j) uf.unite(c->atoms[0], c->atoms[j]);
    if (!factorize && !c->atoms.empty()) {
      if (anchor)
        uf.unite(*anchor, c->atoms[0]);
      else
        anchor = c->atoms[0];
    }
  }
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (!parts[i]->atoms.empty()) by_root[uf.find(parts[i]->atoms[0])].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : by_root) out.push_back(std::move(members));
  return out;
}

}  // namespace

double wmc(const Formula& phi, const WeightMap& w, const GroundBase& base, const WmcOptions& opt) {
  if (w.size() != base.size()) throw EvalError("weight map does not cover the Herbrand base");
  Compiler compiler(base, w);
  std::vector<Circuit> circuits;
  for (const auto& f : phi.conjuncts()) {
    if (!f.closed()) throw EvalError("formula is not closed: " + f.str());
    Circuit c = compiler.compile(f);
    if (c.root == kFalseGate) return 0.0;
    if (c.root == kTrueGate) continue;
    circuits.push_back(std::move(c));
  }
  std::vector<const Circuit*> parts;
  for (const auto& c : circuits) parts.push_back(&c);
  double z = 1.0;
  for (const auto& members : group(parts, opt.factorize)) {
    std::vector<const Circuit*> sub;
    for (auto i : members) sub.push_back(parts[i]);
    z *= enumerate(merge(sub), w, base, opt).z;
    if (z == 0.0) return 0.0;
  }
  return z;
}

// ---------------------------------------------------------------------------
// Conditioner

struct Conditioner::Impl {
  const GroundBase* base = nullptr;
  WeightMap w;
  WmcOptions opt;
  std::vector<Conjunct> conjuncts;
  struct Component {
    std::vector<std::size_t> members;  // into conjuncts
    std::vector<std::size_t> atoms;
    double z = 0.0;
  };
  std::vector<Component> components;
  std::vector<int> component_of;  // per atom, -1 when unconstrained
  std::vector<double> marginals;
  std::vector<bool> map;
  double map_log_probability = 0.0;
  std::size_t widest = 0;
  GroundBase base_copy;
};

Conditioner::Conditioner(const GroundBase& base, const WeightMap& w, std::span<const Formula> theory,
                         const WmcOptions& opt)
    : impl_(std::make_unique<Impl>()) {
  if (w.size() != base.size()) throw EvalError("weight map does not cover the Herbrand base");
  impl_->base_copy = base;
  impl_->base = &impl_->base_copy;
  impl_->w = w;
  impl_->opt = opt;

  Compiler compiler(base, w);
  for (std::size_t idx = 0; idx < theory.size(); ++idx) {
    for (const auto& f : theory[idx].conjuncts()) {
      if (!f.closed()) throw EvalError("theory formula is not closed: " + f.str());
      Circuit c = compiler.compile(f);
      if (c.root == kFalseGate) throw InconsistencyError("theory is unsatisfiable: " + f.str(), idx);
      if (c.root == kTrueGate) continue;
      impl_->conjuncts.push_back({std::move(c), idx});
    }
  }

  std::vector<const Circuit*> parts;
  for (const auto& c : impl_->conjuncts) parts.push_back(&c.circuit);

  impl_->component_of.assign(base.size(), -1);
  impl_->marginals = w;
  impl_->map.assign(base.size(), false);
  for (std::size_t i = 0; i < base.size(); ++i) {
    impl_->map[i] = w[i] > 0.5;
    impl_->map_log_probability += std::log(std::max(w[i], 1.0 - w[i]));
  }

  for (auto& members : group(parts, opt.factorize)) {
    std::vector<const Circuit*> sub;
    std::size_t last_origin = 0;
    for (auto i : members) {
      sub.push_back(parts[i]);
      last_origin = std::max(last_origin, impl_->conjuncts[i].origin);
    }
    const Circuit merged = merge(sub);
    const Enumeration e = enumerate(merged, w, base, opt);
    if (e.z <= 0.0)
      throw InconsistencyError("theory has zero weighted model count", last_origin);

    const int id = static_cast<int>(impl_->components.size());
    impl_->widest = std::max(impl_->widest, merged.atoms.size());
    double free_map = 0.0;
    for (std::size_t j = 0; j < merged.atoms.size(); ++j) {
      const std::size_t a = merged.atoms[j];
      impl_->component_of[a] = id;
      impl_->marginals[a] = e.true_mass[j] / e.z;
      impl_->map[a] = e.best[j];
      free_map += std::log(std::max(w[a], 1.0 - w[a]));
    }
    impl_->map_log_probability += std::log(e.best_weight / e.z) - free_map;
    impl_->components.push_back({std::move(members), merged.atoms, e.z});
  }
}

Conditioner::~Conditioner() = default;
Conditioner::Conditioner(Conditioner&&) noexcept = default;
Conditioner& Conditioner::operator=(Conditioner&&) noexcept = default;

double Conditioner::probability(const Formula& phi) const {
  const Impl& m = *impl_;
  Compiler compiler(*m.base, m.w);
  std::vector<Circuit> query;
  for (const auto& f : phi.conjuncts()) {
    if (!f.closed()) throw EvalError("query is not closed: " + f.str());
    Circuit c = compiler.compile(f);
    if (c.root == kFalseGate) return 0.0;
    if (c.root == kTrueGate) continue;
    query.push_back(std::move(c));
  }
  if (query.empty()) return 1.0;

  // Each query conjunct pulls in the whole theory component of its atoms.
  UnionFind uf;
  for (const auto& c : query) {
    for (std::size_t j = 1; j < c.atoms.size(); ++j) uf.unite(c.atoms[0], c.atoms[j]);
    for (auto a : c.atoms) {
      const int comp = m.component_of[a];
      if (comp >= 0) uf.unite(a, m.components[comp].atoms.front());
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> query_groups;
  for (std::size_t i = 0; i < query.size(); ++i) query_groups[uf.find(query[i].atoms[0])].push_back(i);

  double p = 1.0;
  for (const auto& [root, members] : query_groups) {
    std::vector<const Circuit*> parts;
    std::vector<int> theory_components;
    for (auto i : members) {
      parts.push_back(&query[i]);
      for (auto a : query[i].atoms) {
        const int comp = m.component_of[a];
        if (comp >= 0 && std::find(theory_components.begin(), theory_components.end(), comp) ==
                             theory_components.end())
          theory_components.push_back(comp);
      }
    }
    double denominator = 1.0;
    for (int comp : theory_components) {
      denominator *= m.components[comp].z;
      for (auto ci : m.components[comp].members) parts.push_back(&m.conjuncts[ci].circuit);
    }
    const double numerator = enumerate(merge(parts), m.w, *m.base, m.opt).z;
    p *= numerator / denominator;
    if (p == 0.0) return 0.0;
  }
  return std::clamp(p, 0.0, 1.0);
}

const std::vector<double>& Conditioner::marginals() const { return impl_->marginals; }

const std::vector<bool>& Conditioner::map_assignment() const { return impl_->map; }

DomainModel Conditioner::map_model() const { return impl_->base->model(impl_->map); }

double Conditioner::map_probability() const { return std::exp(impl_->map_log_probability); }

std::size_t Conditioner::widest_component() const { return impl_->widest; }

}  // namespace secure
