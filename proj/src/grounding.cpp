#include "secure/grounding.hpp"

#include <cmath>
#include <string>

#include "secure/error.hpp"

namespace secure {

void GroundingConfig::validate() const {
  if (!(tau > 0.0 && tau <= std::log(2.0)))
    throw ConfigError("grounding tau must lie in (0, ln 2], got " + std::to_string(tau));
  if (!(scale > 0.0)) throw ConfigError("grounding scale must be positive");
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

std::pair<double, double> admission_bounds(double tau) {
  double lo = 0.0;
  double hi = 0.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (binary_entropy(mid) <= tau)
      lo = mid;
    else
      hi = mid;
  }
  return {lo, 1.0 - lo};
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("embedding dimensions differ");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error("cosine similarity of a zero-norm vector");
  return dot / std::sqrt(na * nb);
}

SupportSplit build_supports(std::span<const SupportEntry> support, std::size_t symbol,
                            const GroundingConfig& cfg) {
  SupportSplit split;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double y = support[i].y.at(symbol);
    if (binary_entropy(y) > cfg.tau) continue;
    if (y > 0.5)
      split.positive.push_back(i);
    else if (y < 0.5)
      split.negative.push_back(i);
  }
  return split;
}

namespace {

bool contains(const std::vector<std::size_t>& v, std::size_t i) {
  for (auto j : v)
    if (j == i) return true;
  return false;
}

// Entry with the largest (or smallest) label entropy, skipping `exclude`
// unless that leaves nothing. Ties go to the earliest entry.
std::size_t fallback_entry(std::span<const SupportEntry> support, std::size_t symbol,
                           const std::vector<std::size_t>& exclude, bool largest) {
  const bool use_exclude = exclude.size() < support.size();
  std::size_t best = support.size();
  double best_h = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (use_exclude && contains(exclude, i)) continue;
    const double h = binary_entropy(support[i].y[symbol]);
    if (best == support.size() || (largest ? h > best_h : h < best_h)) {
      best = i;
      best_h = h;
    }
  }
  return best;
}

std::vector<double> weighted_mean(std::span<const SupportEntry> support, const std::vector<std::size_t>& members,
                                  std::size_t symbol, bool positive) {
  std::vector<double> z(support[members.front()].x.size(), 0.0);
  for (auto i : members) {
    const double y = support[i].y[symbol];
    const double weight = positive ? y : 1.0 - y;
    const auto& x = support[i].x;
    if (x.size() != z.size()) throw Error("support embeddings have different dimensions");
    for (std::size_t d = 0; d < z.size(); ++d) z[d] += weight * x[d];
  }
  for (auto& v : z) v /= static_cast<double>(members.size());
  return z;
}

}  // namespace

PrototypePair compute_prototypes(std::span<const SupportEntry> support, const SupportSplit& split,
                                 std::size_t symbol) {
  if (support.empty()) throw GroundingUnavailable("empty support for symbol #" + std::to_string(symbol));
  PrototypePair p;
  if (!split.positive.empty()) {
    p.positive = weighted_mean(support, split.positive, symbol, true);
  } else {
    p.positive = support[fallback_entry(support, symbol, split.negative, true)].x;
    p.positive_fallback = true;
  }
  if (!split.negative.empty()) {
    p.negative = weighted_mean(support, split.negative, symbol, false);
  } else {
    p.negative = support[fallback_entry(support, symbol, split.positive, false)].x;
    p.negative_fallback = true;
  }
  return p;
}

double predict(const PrototypePair& prototypes, std::span<const double> x, const GroundingConfig& cfg) {
  if (cfg.sign_mode == SignMode::corrected) {
    if (prototypes.positive == prototypes.negative) {
      cosine_similarity(x, x);  // still rejects a zero-norm query
      return 0.5;
    }
    return sigmoid(cfg.scale *
                   (cosine_similarity(x, prototypes.positive) - cosine_similarity(x, prototypes.negative)));
  }
  std::vector<double> diff(prototypes.negative.size());
  bool zero = true;
  for (std::size_t d = 0; d < diff.size(); ++d) {
    diff[d] = prototypes.negative[d] - prototypes.positive[d];
    zero = zero && diff[d] == 0.0;
  }
  if (zero) {
    cosine_similarity(x, x);
    return 0.5;
  }
  return sigmoid(cosine_similarity(diff, x));
}

std::vector<double> predict_labels(std::span<const SupportEntry> support, std::span<const double> x,
                                   std::size_t symbols, const GroundingConfig& cfg) {
  std::vector<double> out(symbols, 0.5);
  for (std::size_t s = 0; s < symbols; ++s)
    out[s] = predict(compute_prototypes(support, build_supports(support, s, cfg), s), x, cfg);
  return out;
}

}  // namespace secure
