// Conversation policy: ask a question or attempt the task.
//
// Each action is scored by a linear Q-function over two features, the
// expected information gain and the expected reward.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "secure/belief.hpp"
#include "secure/discourse.hpp"
#include "secure/parser.hpp"

namespace secure {

struct CostConfig {
  double c_point = 0.1;
  double c_ref = 0.1;

  void validate() const;
};

struct PolicyParams {
  std::array<double, 2> theta{1.0, 1.0};  // information gain, expected reward

  void validate() const;
};

struct SarsaConfig {
  double alpha = 0.1;
  double gamma = 0.99;
  double epsilon = 0.1;
  int m = 1;                   // tasks per environment
  double theta_bound = 1e6;    // divergence guard on ‖θ‖

  void validate() const;
};

enum class PolicyKind { secure, simple, correct };

std::string policy_name(PolicyKind k);
PolicyKind policy_from_name(std::string_view name);

struct PolicySpec {
  PolicyKind kind = PolicyKind::secure;
  AnalysisMode mode = AnalysisMode::secure;
  bool can_ask = true;
};

PolicySpec make_policy(PolicyKind kind);

struct AgentAction {
  enum class Kind { act, ask };
  Kind kind = Kind::act;
  QuestionAction question;  // ask

  static AgentAction act() { return {}; }
  static AgentAction ask(QuestionAction q) { return {Kind::ask, std::move(q)}; }
  std::string str() const;

  friend bool operator==(const AgentAction& a, const AgentAction& b) {
    return a.kind == b.kind && (a.kind == Kind::act || a.question == b.question);
  }
};

// Obj(r): how many objects the answer designates. Universal forms need the
// realized designation size.
double designation_count(const RefForm& r, std::size_t designated);
// Sym(r): distinct predicate symbols in the restrictor.
std::size_t symbol_count(const RefForm& r);

// c_point·Obj + c_ref·Sym with the realized designation size.
double question_cost(const QuestionAction& q, const CostConfig& cfg, std::size_t designated);
// Same, with universal designations sized (|O| − 1) / 2.
double expected_question_cost(const QuestionAction& q, const CostConfig& cfg, std::size_t scene_size);

// Designations of the plan the agent would execute. An empty side means no
// executable plan was found.
struct PlannedReferents {
  std::vector<ObjectId> direct;
  std::vector<ObjectId> landmarks;
};

struct DecisionContext {
  const BeliefState* belief = nullptr;
  const BeliefConfig* belief_cfg = nullptr;
  const TaskInstruction* task = nullptr;
  AnalysisMode mode = AnalysisMode::secure;
  CostConfig costs;
  std::size_t max_candidate_objects = 8;
  std::optional<PlannedReferents> planned;  // default: the MAP referents
};

// Candidate answers to a question: designation sets with their likelihood
// under w_g, normalised over consistent candidates.
struct AnswerCandidate {
  std::vector<ObjectId> designation;
  Formula meaning;
  double probability = 0.0;
};
std::vector<AnswerCandidate> answer_distribution(const DecisionContext& ctx, const RefForm& question);

// H(b) − E[H(Update(b, φ))]; 0 for the act action and for questions with no
// consistent answer.
double expected_info_gain(const DecisionContext& ctx, const AgentAction& a);

// Questions: −expected cost. Act: 2·CON(ξ(r_d, D̂) ∧ ξ(r_i, L̂) | b) − 1,
// where D̂ and L̂ are the planned designations, and −1 without a plan.
double expected_reward(const DecisionContext& ctx, const AgentAction& a);

using Features = std::array<double, 2>;

Features features(const DecisionContext& ctx, const AgentAction& a);

inline double q_value(const Features& h, const PolicyParams& p) { return p.theta[0] * h[0] + p.theta[1] * h[1]; }

// ε-greedy over precomputed Q-values; ties go to the lowest index.
std::size_t select_action(const std::vector<double>& q, double epsilon, std::mt19937_64& rng);

// The act action first, then the instruction's questions not yet asked.
std::vector<AgentAction> available_actions(const PolicySpec& spec, const TaskInstruction& t,
                                           const std::vector<QuestionAction>& asked);

// Chooses among actions given their features and learns from rewards.
class Decider {
 public:
  virtual ~Decider() = default;
  virtual void begin_episode() {}
  virtual std::size_t choose(const std::vector<Features>& h) = 0;
  // Reward of the last chosen action; terminal ends the learning episode.
  virtual void observe(double reward, bool terminal) { (void)reward, (void)terminal; }
};

class EpsilonGreedy : public Decider {
 public:
  EpsilonGreedy(PolicyParams params, double epsilon, std::uint64_t seed)
      : params_(params), epsilon_(epsilon), rng_(seed) {}

  std::size_t choose(const std::vector<Features>& h) override;

 private:
  PolicyParams params_;
  double epsilon_;
  std::mt19937_64 rng_;
};

struct SarsaStep {
  double reward = 0.0;
  double td_error = 0.0;
  PolicyParams theta;
};

// Episodic semi-gradient SARSA with a linear Q-function. The first action of
// an episode is greedy; later actions are ε-greedy and are the a′ of the
// bootstrap target.
class SarsaLearner : public Decider {
 public:
  SarsaLearner(PolicyParams params, SarsaConfig cfg, std::uint64_t seed);

  void begin_episode() override;
  std::size_t choose(const std::vector<Features>& h) override;
  void observe(double reward, bool terminal) override;

  const PolicyParams& params() const noexcept { return params_; }
  const std::vector<SarsaStep>& history() const noexcept { return history_; }

 private:
  void step(double target);

  PolicyParams params_;
  SarsaConfig cfg_;
  std::mt19937_64 rng_;
  std::optional<Features> last_h_;
  std::optional<double> pending_reward_;
  bool first_ = true;
  std::vector<SarsaStep> history_;
};

}  // namespace secure
