#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "secure/error.hpp"
#include "secure/grounding.hpp"

using namespace secure;

TEST_CASE("entropy in nats") {
  CHECK(binary_entropy(0.5) == doctest::Approx(std::numbers::ln2));
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.9) == doctest::Approx(0.3251).epsilon(1e-4));
  CHECK(binary_entropy(0.6) == doctest::Approx(0.6730).epsilon(1e-4));
  CHECK(binary_entropy(0.2) == doctest::Approx(0.5004).epsilon(1e-4));
}

TEST_CASE("admission bounds at tau 0.65") {
  const auto [lo, hi] = admission_bounds(0.65);
  CHECK(std::abs(lo - 0.354) < 1e-3);
  CHECK(std::abs(hi - 0.646) < 1e-3);
  CHECK(lo + hi == doctest::Approx(1.0));
  CHECK(binary_entropy(hi) == doctest::Approx(0.65).epsilon(1e-9));
}

TEST_CASE("support split") {
  const std::vector<SupportEntry> s = {{{1, 0}, {0.9}}, {{0, 1}, {0.6}}, {{1, 1}, {0.2}}, {{2, 1}, {0.5}}};
  const auto split = build_supports(s, 0, {});
  CHECK(split.positive == std::vector<std::size_t>{0});
  CHECK(split.negative == std::vector<std::size_t>{2});
}

TEST_CASE("prototypes") {
  SUBCASE("one positive") {
    const std::vector<SupportEntry> s = {{{3, 4}, {1.0}}};
    const auto p = compute_prototypes(s, build_supports(s, 0, {}), 0);
    CHECK(p.positive == std::vector<double>{3, 4});
    CHECK_FALSE(p.positive_fallback);
    CHECK(p.negative_fallback);
  }
  SUBCASE("average of positives") {
    const std::vector<SupportEntry> s = {{{2, 0}, {1.0}}, {{0, 4}, {1.0}}};
    const auto p = compute_prototypes(s, build_supports(s, 0, {}), 0);
    CHECK(p.positive == std::vector<double>{1, 2});
  }
  SUBCASE("fallback to the most uncertain entry") {
    const std::vector<SupportEntry> s = {{{1, 0}, {0.49}}, {{0, 1}, {0.1}}};
    const auto p = compute_prototypes(s, build_supports(s, 0, {}), 0);
    CHECK(p.positive_fallback);
    CHECK(p.positive == std::vector<double>{1, 0});
    CHECK(p.negative == std::vector<double>{0, 0.9});
  }
  CHECK_THROWS_AS(compute_prototypes({}, {}, 0), GroundingUnavailable);
}

TEST_CASE("predictions") {
  GroundingConfig cfg;
  PrototypePair pp{{1, 0}, {0, 1}};
  CHECK(predict(pp, std::vector<double>{1, 1}, cfg) == doctest::Approx(0.5));
  CHECK(predict(pp, std::vector<double>{1, 0}, cfg) == doctest::Approx(0.9933).epsilon(1e-4));
  CHECK(predict(pp, std::vector<double>{0, 1}, cfg) == doctest::Approx(0.0067).epsilon(1e-2));

  GroundingConfig literal;
  literal.sign_mode = SignMode::literal;
  // printed form: sigmoid(cos(z- - z+, x))
  CHECK(predict(pp, std::vector<double>{1, 0}, literal) == doctest::Approx(sigmoid(-1.0 / std::sqrt(2.0))));
  CHECK_THROWS_AS(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), Error);
}

TEST_CASE("uniform labels give one half") {
  const std::vector<SupportEntry> s = {{{1, 0}, {0.5}}, {{0, 1}, {0.5}}, {{1, 1}, {0.5}}};
  for (const auto& e : s) CHECK(predict_labels(s, e.x, 1, {})[0] == doctest::Approx(0.5));
}

TEST_CASE("prototype sanity, monotonicity and permutation invariance") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  auto vec = [&] {
    std::vector<double> v(8);
    for (auto& x : v) x = n(rng);
    return v;
  };
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SupportEntry> s;
    for (int i = 0; i < 6; ++i) s.push_back({vec(), {i % 2 ? 0.05 : 0.95}});
    const auto p = compute_prototypes(s, build_supports(s, 0, {}), 0);
    CHECK(predict(p, p.positive, {}) > 0.5);
    CHECK(predict(p, p.negative, {}) < 0.5);

    const auto x = vec();
    const double before = predict_labels(s, x, 1, {})[0];
    auto more = s;
    more.push_back({x, {1.0}});
    CHECK(predict_labels(more, x, 1, {})[0] >= before - 1e-12);

    auto shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(predict_labels(shuffled, x, 1, {})[0] == doctest::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("config validation") {
  GroundingConfig c;
  c.tau = 0.8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.tau = 0.65;
  c.scale = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
