#include <doctest.h>

#include <cmath>

#include "secure/error.hpp"
#include "secure/harness.hpp"

using namespace secure;

namespace {

ExperimentConfig small(int episodes, int runs) {
  ExperimentConfig c;
  c.episodes = episodes;
  c.runs = runs;
  c.threads = 2;
  return c;
}

}  // namespace

TEST_CASE("statistics") {
  const auto ci = confidence_interval({1.0, 2.0, 3.0});
  CHECK(ci.mean == doctest::Approx(2.0));
  // t(0.975, 2) = 4.3027
  CHECK(ci.hi - ci.mean == doctest::Approx(4.302653 / std::sqrt(3.0)).epsilon(1e-5));
  const auto one = confidence_interval({5.0});
  CHECK(one.lo == 5.0);
  CHECK(one.hi == 5.0);

  const auto s = sign_test({1, 1, 1, 1, 1, 0, 2}, {0, 0, 0, 0, 0, 0, 3});
  CHECK(s.positive == 5);
  CHECK(s.negative == 1);
  CHECK(s.p_value == doctest::Approx(7.0 / 64.0));

  CHECK(moving_average({1, 2, 3, 4}, 2) == std::vector<double>{1.5, 2.5, 3.5});
  CHECK(F1Counts{2, 1, 1, 5}.f1() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("a scripted episode") {
  const Scene scene = generate_scene(21, {});
  std::mt19937_64 rng(21);
  const TaskInstruction t = generate_task(scene, rng);
  EpisodeConfig ecfg;
  BeliefConfig bcfg;
  BeliefState belief = make_belief({}, {});
  EpsilonGreedy decider({{1, 1}}, 0.0, 3);
  OracleTeacher oracle(4);
  const auto r = run_episode(make_policy(PolicyKind::secure), ecfg, bcfg, belief, scene, t, decider, oracle);
  CHECK(r.attempts >= 1);
  CHECK(r.attempts <= ecfg.attempts);
  CHECK(r.oracle_violations == 0);
  CHECK(r.reward - r.cost == doctest::Approx(r.solved ? 1.0 : 0.0));
  CHECK(r.cost <= 0.0);
  CHECK(r.transcript.contains("events"));
  for (const auto& e : r.transcript["events"]) CHECK(e.contains("type"));
  CHECK(belief.knows(t.direct.restrictor.symbols().front().name));
}

TEST_CASE("the correct-only policy never asks") {
  auto cfg = small(6, 1);
  cfg.policies = {PolicyKind::correct};
  const auto r = run_experiment(cfg);
  for (const auto& rec : r.records)
    for (const auto& e : rec.transcript["events"]) CHECK(e.at("type") != "question");
}

TEST_CASE("experiment metrics") {
  const auto r = run_experiment(small(8, 2));
  CHECK(r.records.size() == 3 * 8 * 2);
  for (auto p : r.config.policies)
    for (int run = 0; run < 2; ++run) {
      const Metrics m = r.metrics(p, run);
      CHECK(m.cr - m.cc == doctest::Approx(m.solved));
      CHECK(m.mf1 >= 0.0);
      CHECK(m.mf1 <= 1.0);
    }
  for (const auto& rec : r.records) {
    CHECK(rec.oracle_violations == 0);
    CHECK(rec.reward - rec.cost == doctest::Approx(rec.solved ? 1.0 : 0.0));
  }
  const auto summary = experiment_summary(r);
  CHECK(summary["cells"].size() == 6);
  CHECK(summary["sign_tests"].size() == 6);
  CHECK(summary["oracle"]["violations"] == 0);

  const std::string csv = curves_csv(r);
  CHECK(csv.rfind("policy,episode,", 0) == 0);
  std::size_t lines = 0;
  for (char c : transcripts_jsonl(r)) lines += c == '\n';
  CHECK(lines == r.records.size());
}

TEST_CASE("experiments are reproducible and share tasks across policies") {
  const auto a = run_experiment(small(4, 1));
  auto cfg = small(4, 1);
  cfg.threads = 1;
  const auto b = run_experiment(cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].transcript == b.records[i].transcript);

  const auto s1 = task_stream(1, 0, 4, {});
  const auto s2 = task_stream(1, 0, 4, {});
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].task == s2[i].task);
  CHECK_FALSE(task_stream(1, 1, 4, {})[0].task == s1[0].task);
}

TEST_CASE("configuration") {
  const auto cfg = experiment_config_from_json(
      {{"episodes", 5}, {"runs", 2}, {"policies", {"secure", "correct"}}, {"prior_mode", "pessimistic"},
       {"c_point", 0.2}, {"theta", {0.5, 2.0}}});
  CHECK(cfg.episodes == 5);
  CHECK(cfg.policies.size() == 2);
  CHECK(cfg.episode.prior_mode == PriorMode::pessimistic);
  CHECK(cfg.episode.costs.c_point == 0.2);
  CHECK(cfg.params.theta[1] == 2.0);
  CHECK(experiment_config_from_json(experiment_config_to_json(cfg)).episodes == 5);
  CHECK_THROWS_AS(experiment_config_from_json({{"episodes", 0}}), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json({{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json({{"policies", {"greedy"}}}), ConfigError);
}

TEST_CASE("biased priors reach the texture atoms") {
  auto cfg = small(2, 1);
  cfg.episode.prior_mode = PriorMode::optimistic;
  const Scene scene = generate_scene(2, {});
  BeliefState b = make_belief({}, {});
  EpsilonGreedy d({{1, 1}}, 0.0, 1);
  Episode ep(make_policy(PolicyKind::secure), cfg.episode, cfg.belief, b, scene, d);
  CHECK(ep.prior_for("dotted") == doctest::Approx(0.7));
  CHECK(ep.prior_for("red") == doctest::Approx(0.5));
}

TEST_CASE("sarsa training") {
  TrainingConfig cfg;
  cfg.episodes = 12;
  const auto r = train_policy(cfg);
  CHECK(r.episode_rewards.size() == 12);
  CHECK(std::isfinite(r.params.theta[0]));
  CHECK(std::isfinite(r.params.theta[1]));
  CHECK_FALSE(r.steps.empty());
  CHECK(training_csv(r).rfind("step,reward,theta1,theta2\n", 0) == 0);
}
