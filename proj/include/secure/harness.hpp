// Episodes, experiments and metrics.
//
// An Episode is the agent's side of one task: it owns the scene and the
// belief while the task runs and exposes the agent's pending move. The
// oracle loop in run_episode and the interactive session both drive it.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "secure/belief.hpp"
#include "secure/discourse.hpp"
#include "secure/policy.hpp"
#include "secure/sim.hpp"

#include <json.hpp>

namespace secure {

enum class PriorMode { neutral, optimistic, pessimistic };

std::string prior_mode_name(PriorMode m);
PriorMode prior_mode_from_name(std::string_view name);

struct EpisodeConfig {
  int attempts = 5;
  CostConfig costs;
  PriorMode prior_mode = PriorMode::neutral;
  double neutral_prior = 0.5;
  double optimistic_prior = 0.7;
  double pessimistic_prior = 0.3;
  std::string biased_category = "texture";
  // Training: the episode ends at the first reward of magnitude 1.
  bool stop_at_terminal = false;
  // Training: a question whose realized cost reaches 1 is a config error.
  bool forbid_terminal_questions = false;

  void validate() const;
};

// Counts of (symbol, object) membership decisions.
struct F1Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  double f1() const;
};

// w_g(p(o)) >= 0.5 against the scene's attributes, for the instruction's
// unary symbols.
F1Counts grounding_f1(const BeliefState& b, const Scene& scene, const TaskInstruction& t);

class Episode {
 public:
  enum class Pending { none, question, action };

  Episode(PolicySpec policy, EpisodeConfig cfg, BeliefConfig belief_cfg, BeliefState belief, Scene scene,
          Decider& decider);

  // Admits the instruction's neologisms, takes the F1 snapshot, asserts the
  // presuppositions and lets the agent make its first move.
  void instruct(const TaskInstruction& t);

  Pending pending() const noexcept { return pending_; }
  const QuestionAction& question() const;
  const ExecutionAction& action() const;

  // Answer to the pending question; nullopt is a reference failure.
  void answer(const std::optional<std::vector<ObjectId>>& designation);
  // The teacher lets the pending executed action stand.
  void accept();
  // The teacher corrects the pending executed action.
  void correct(const Correction& c);

  bool finished() const noexcept { return finished_; }
  bool solved() const noexcept { return solved_; }
  int attempts() const noexcept { return attempts_; }
  double reward() const noexcept { return reward_; }
  double cost() const noexcept { return cost_; }
  const F1Counts& f1() const noexcept { return f1_; }
  const TaskInstruction& task() const noexcept { return task_; }
  const Scene& scene() const noexcept { return scene_; }
  const BeliefState& belief() const noexcept { return belief_; }
  BeliefState take_belief() { return std::move(belief_); }
  const nlohmann::json& events() const noexcept { return events_; }
  // Formulas derived from the teacher's messages, in order.
  const std::vector<Formula>& derived() const noexcept { return derived_; }
  double prior_for(const std::string& symbol) const;

 private:
  void admit(const std::vector<Symbol>& symbols);
  void assert_formula(const Formula& phi, const std::string& source);
  void sync_relations();
  void decide();
  void start_attempt();
  void execute_next();
  void reward(double r, bool terminal);
  void finish(bool solved);
  struct Attempt {
    std::vector<ExecutionAction> plan;
    PlannedReferents referents;
    std::string source;
  };
  Attempt plan_attempt() const;

  PolicySpec policy_;
  EpisodeConfig cfg_;
  BeliefConfig belief_cfg_;
  BeliefState belief_;
  Scene scene_;
  Decider* decider_;
  TaskInstruction task_;
  bool instructed_ = false;

  Pending pending_ = Pending::none;
  QuestionAction question_;
  std::optional<Attempt> next_attempt_;
  std::vector<ExecutionAction> plan_;
  std::size_t step_ = 0;
  std::optional<Scene> before_action_;
  std::optional<Scene> before_pick_;
  std::vector<QuestionAction> asked_;

  bool finished_ = false;
  bool solved_ = false;
  int attempts_ = 0;
  double reward_ = 0.0;
  double cost_ = 0.0;
  F1Counts f1_;
  nlohmann::json events_ = nlohmann::json::array();
  std::vector<Formula> derived_;
};

struct EpisodeResult {
  nlohmann::json transcript;
  double reward = 0.0;
  double cost = 0.0;
  bool solved = false;
  int attempts = 0;
  F1Counts f1;
  std::size_t oracle_formulas = 0;
  std::size_t oracle_violations = 0;
  Scene final_scene;
};

// Drives an episode with the oracle teacher. Every formula derived from an
// oracle message is model-checked against the ground truth.
EpisodeResult run_episode(const PolicySpec& policy, const EpisodeConfig& cfg, const BeliefConfig& belief_cfg,
                          BeliefState& belief, const Scene& scene, const TaskInstruction& t, Decider& decider,
                          OracleTeacher& oracle);

struct ExperimentConfig {
  int episodes = 60;
  int runs = 5;
  std::uint64_t seed = 1;
  std::vector<PolicyKind> policies{PolicyKind::secure, PolicyKind::simple, PolicyKind::correct};
  EpisodeConfig episode;
  BeliefConfig belief;
  PolicyParams params;
  double epsilon = 0.0;
  SceneSpec scene;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

struct EpisodeRecord {
  int run = 0;
  int episode = 0;
  PolicyKind policy = PolicyKind::secure;
  double reward = 0.0;
  double cost = 0.0;
  bool solved = false;
  int attempts = 0;
  double f1 = 0.0;
  std::size_t oracle_formulas = 0;
  std::size_t oracle_violations = 0;
  nlohmann::json transcript;
};

struct CurvePoint {
  int episode = 0;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct PolicyCurves {
  PolicyKind policy = PolicyKind::secure;
  std::vector<CurvePoint> cr;   // cumulative reward
  std::vector<CurvePoint> cc;   // cumulative cost
  std::vector<CurvePoint> mf1;  // mean F1 over tasks so far
};

struct Metrics {
  double cr = 0.0;
  double cc = 0.0;
  double mf1 = 0.0;
  int solved = 0;
};

Metrics compute_metrics(const std::vector<EpisodeRecord>& records);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<EpisodeRecord> records;  // sorted by (policy, run, episode)
  std::vector<PolicyCurves> curves;
  double seconds = 0.0;

  std::vector<EpisodeRecord> cell(PolicyKind policy, int run) const;
  Metrics metrics(PolicyKind policy, int run) const;
};

// Tasks shared by every policy of a run.
struct TaskSpec {
  Scene scene;
  TaskInstruction task;
  std::uint64_t oracle_seed = 0;
};
std::vector<TaskSpec> task_stream(std::uint64_t seed, int run, int episodes, const SceneSpec& spec);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Mean with a two-sided 95% Student-t interval.
CurvePoint confidence_interval(const std::vector<double>& xs);

// One-sided sign test that a > b pairwise; ties are dropped.
struct SignTest {
  std::size_t positive = 0;
  std::size_t negative = 0;
  double p_value = 1.0;
};
SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b);

// Per-cell metrics, final curve points, oracle soundness counts and the
// pairwise per-episode reward sign tests between policies.
nlohmann::json experiment_summary(const ExperimentResult& r);

std::string curves_csv(const ExperimentResult& r);
std::string transcripts_jsonl(const ExperimentResult& r);

struct TrainingConfig {
  int episodes = 100;
  std::uint64_t seed = 7;
  PolicyKind policy = PolicyKind::secure;
  SarsaConfig sarsa;
  PolicyParams initial;
  EpisodeConfig episode;
  BeliefConfig belief;
  SceneSpec scene;
};

struct TrainingResult {
  PolicyParams params;
  std::vector<double> episode_rewards;
  std::vector<SarsaStep> steps;
};

// Experiment keys plus "policy", "alpha", "gamma", "m" and "theta_bound".
// Here "epsilon" is the SARSA exploration rate and "theta" the initial θ.
TrainingConfig training_config_from_json(const nlohmann::json& j);

TrainingResult train_policy(const TrainingConfig& cfg);

// One row per SARSA update: step, reward, theta1, theta2.
std::string training_csv(const TrainingResult& r);

std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window);

}  // namespace secure
