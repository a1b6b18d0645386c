// Prototype grounding: per-symbol positive and negative prototypes built
// from a labelled support set, and cosine-based membership predictions.

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace secure {

enum class SignMode { corrected, literal };

struct GroundingConfig {
  double tau = 0.65;  // entropy threshold, nats
  SignMode sign_mode = SignMode::corrected;
  double scale = 5.0;

  // Throws ConfigError.
  void validate() const;
};

// One labelled exemplar: an embedding and a membership label per symbol.
struct SupportEntry {
  std::vector<double> x;
  std::vector<double> y;

  friend bool operator==(const SupportEntry&, const SupportEntry&) = default;
};

struct SupportSplit {
  std::vector<std::size_t> positive;  // indices into the support
  std::vector<std::size_t> negative;
};

struct PrototypePair {
  std::vector<double> positive;
  std::vector<double> negative;
  bool positive_fallback = false;
  bool negative_fallback = false;
};

// Bernoulli entropy in nats; 0 at p ∈ {0, 1}.
double binary_entropy(double p);

// Labels p with H(p) <= tau lie in [0, lower] or [upper, 1].
std::pair<double, double> admission_bounds(double tau);

double sigmoid(double z);

// Throws Error when either vector has zero norm or the sizes differ.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

SupportSplit build_supports(std::span<const SupportEntry> support, std::size_t symbol,
                            const GroundingConfig& cfg);

// Throws GroundingUnavailable when the support is empty.
PrototypePair compute_prototypes(std::span<const SupportEntry> support, const SupportSplit& split,
                                 std::size_t symbol);

double predict(const PrototypePair& prototypes, std::span<const double> x, const GroundingConfig& cfg);

// ŷ for every symbol in [0, symbols).
std::vector<double> predict_labels(std::span<const SupportEntry> support, std::span<const double> x,
                                   std::size_t symbols, const GroundingConfig& cfg);

}  // namespace secure
