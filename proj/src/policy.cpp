#include "secure/policy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "secure/error.hpp"

namespace secure {

void CostConfig::validate() const {
  if (!(c_point >= 0.0) || !(c_ref >= 0.0) || !std::isfinite(c_point) || !std::isfinite(c_ref))
    throw ConfigError("question costs must be finite and nonnegative");
}

void PolicyParams::validate() const {
  if (!std::isfinite(theta[0]) || !std::isfinite(theta[1])) throw ConfigError("policy parameters must be finite");
}

void SarsaConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (m < 1) throw ConfigError("m must be at least 1");
  if (!(theta_bound > 0.0)) throw ConfigError("theta bound must be positive");
}

std::string policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::secure:
      return "secure";
    case PolicyKind::simple:
      return "simple";
    case PolicyKind::correct:
      return "correct";
  }
  return "secure";
}

PolicyKind policy_from_name(std::string_view name) {
  if (name == "secure") return PolicyKind::secure;
  if (name == "simple") return PolicyKind::simple;
  if (name == "correct") return PolicyKind::correct;
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

PolicySpec make_policy(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::secure:
      return {kind, AnalysisMode::secure, true};
    case PolicyKind::simple:
      return {kind, AnalysisMode::simple, true};
    case PolicyKind::correct:
      return {kind, AnalysisMode::secure, false};
  }
  return {};
}

std::string AgentAction::str() const { return kind == Kind::act ? "act" : question.surface; }

double designation_count(const RefForm& r, std::size_t designated) {
  const Quantifier& q = r.quantifier;
  switch (q.kind) {
    case QuantifierKind::exactly_n:
    case QuantifierKind::at_most_n:
    case QuantifierKind::at_least_n:
    case QuantifierKind::the_n:
    case QuantifierKind::n_of_the_m:
      return q.n;
    case QuantifierKind::both:
      return 2;
    case QuantifierKind::a:
      return 1;
    case QuantifierKind::every:
    case QuantifierKind::all_but_n:
      return static_cast<double>(designated);
  }
  return 1;
}

std::size_t symbol_count(const RefForm& r) {
  std::set<std::string> names;
  for (const auto& s : r.restrictor.symbols()) names.insert(s.name);
  return names.size();
}

double question_cost(const QuestionAction& q, const CostConfig& cfg, std::size_t designated) {
  return cfg.c_point * designation_count(q.refexp, designated) +
         cfg.c_ref * static_cast<double>(symbol_count(q.refexp));
}

double expected_question_cost(const QuestionAction& q, const CostConfig& cfg, std::size_t scene_size) {
  const auto k = q.refexp.quantifier.kind;
  if (k == QuantifierKind::every || k == QuantifierKind::all_but_n) {
    const double obj = scene_size == 0 ? 0.0 : (static_cast<double>(scene_size) - 1.0) / 2.0;
    return cfg.c_point * obj + cfg.c_ref * static_cast<double>(symbol_count(q.refexp));
  }
  return question_cost(q, cfg, 0);
}

namespace {

void require(const DecisionContext& ctx) {
  if (!ctx.belief || !ctx.belief_cfg || !ctx.task) throw Error("decision context is incomplete");
}

template <typename F>
void for_each_subset(std::size_t n, std::size_t k, F&& f) {
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  while (true) {
    f(pick);
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
}

}  // namespace

std::vector<AnswerCandidate> answer_distribution(const DecisionContext& ctx, const RefForm& question) {
  require(ctx);
  const BeliefState& b = *ctx.belief;
  const std::size_t n = b.objects.size();
  if (n > ctx.max_candidate_objects)
    throw CapacityError("answer enumeration is limited to " + std::to_string(ctx.max_candidate_objects) + " objects");
  const Conditioner cond = grounded_conditioner(b, *ctx.belief_cfg);

  std::vector<AnswerCandidate> out;
  double total = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    bool admitted = false;
    for (std::size_t d = k; d <= n && !admitted; ++d) admitted = question.quantifier.admits(k, d);
    if (!admitted) continue;
    for_each_subset(n, k, [&](const std::vector<std::size_t>& pick) {
      AnswerCandidate c;
      for (auto i : pick) c.designation.push_back(b.objects[i]);
      c.meaning = sentence_semantics(question, c.designation, b.objects, ctx.mode);
      c.probability = cond.probability(c.meaning);
      if (c.probability > 0.0) {
        total += c.probability;
        out.push_back(std::move(c));
      }
    });
  }
  for (auto& c : out) c.probability /= total;
  return out;
}

double expected_info_gain(const DecisionContext& ctx, const AgentAction& a) {
  if (a.kind == AgentAction::Kind::act) return 0.0;
  require(ctx);
  const auto candidates = answer_distribution(ctx, a.question.refexp);
  if (candidates.empty()) return 0.0;
  const double before = belief_entropy(*ctx.belief);
  double after = 0.0;
  double mass = 0.0;
  for (const auto& c : candidates) {
    try {
      after += c.probability * belief_entropy(update_belief(*ctx.belief, c.meaning, *ctx.belief_cfg));
      mass += c.probability;
    } catch (const InconsistencyError&) {
      // Consistent under w_g but not under w_p; the answer cannot occur.
    }
  }
  if (mass <= 0.0) return 0.0;
  return before - after / mass;
}

double expected_reward(const DecisionContext& ctx, const AgentAction& a) {
  require(ctx);
  const BeliefState& b = *ctx.belief;
  if (a.kind == AgentAction::Kind::ask) return -expected_question_cost(a.question, ctx.costs, b.objects.size());

  // The plan succeeds when its designations are the true referents.
  const Conditioner cond = grounded_conditioner(b, *ctx.belief_cfg);
  PlannedReferents planned;
  if (ctx.planned) {
    planned = *ctx.planned;
  } else {
    const DomainModel map = cond.map_model();
    const Referent direct = referent_of(map, ctx.task->direct);
    const Referent indirect = referent_of(map, ctx.task->indirect);
    if (direct.empty() || indirect.empty()) return -1.0;
    planned = {direct.front(), indirect.front()};
  }
  if (planned.direct.empty() || planned.landmarks.empty()) return -1.0;
  const Formula plan_correct =
      Formula::conj(sentence_semantics(ctx.task->direct, planned.direct, b.objects, ctx.mode),
                    sentence_semantics(ctx.task->indirect, planned.landmarks, b.objects, ctx.mode));
  return 2.0 * cond.probability(plan_correct) - 1.0;
}

Features features(const DecisionContext& ctx, const AgentAction& a) {
  return {expected_info_gain(ctx, a), expected_reward(ctx, a)};
}

std::size_t select_action(const std::vector<double>& q, double epsilon, std::mt19937_64& rng) {
  if (q.empty()) throw Error("no action to choose from");
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
      std::uniform_int_distribution<std::size_t> pick(0, q.size() - 1);
      return pick(rng);
    }
  }
  return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

std::vector<AgentAction> available_actions(const PolicySpec& spec, const TaskInstruction& t,
                                           const std::vector<QuestionAction>& asked) {
  std::vector<AgentAction> out{AgentAction::act()};
  if (!spec.can_ask) return out;
  for (auto& q : generate_questions(t))
    if (std::find(asked.begin(), asked.end(), q) == asked.end()) out.push_back(AgentAction::ask(std::move(q)));
  return out;
}

namespace {

std::vector<double> q_values(const std::vector<Features>& h, const PolicyParams& p) {
  std::vector<double> q;
  for (const auto& f : h) q.push_back(q_value(f, p));
  return q;
}

}  // namespace

std::size_t EpsilonGreedy::choose(const std::vector<Features>& h) {
  return select_action(q_values(h, params_), epsilon_, rng_);
}

SarsaLearner::SarsaLearner(PolicyParams params, SarsaConfig cfg, std::uint64_t seed)
    : params_(params), cfg_(cfg), rng_(seed) {
  cfg_.validate();
  params_.validate();
}

void SarsaLearner::begin_episode() {
  last_h_.reset();
  pending_reward_.reset();
  first_ = true;
}

void SarsaLearner::step(double target) {
  const Features& h = *last_h_;
  const double delta = target - q_value(h, params_);
  params_.theta[0] += cfg_.alpha * delta * h[0];
  params_.theta[1] += cfg_.alpha * delta * h[1];
  const double norm = std::hypot(params_.theta[0], params_.theta[1]);
  if (!std::isfinite(norm) || norm > cfg_.theta_bound)
    throw DivergenceError("policy parameters diverged (norm " + std::to_string(norm) + ")");
  history_.push_back({pending_reward_.value_or(0.0), delta, params_});
}

std::size_t SarsaLearner::choose(const std::vector<Features>& h) {
  const auto q = q_values(h, params_);
  const std::size_t a = select_action(q, first_ ? 0.0 : cfg_.epsilon, rng_);
  first_ = false;
  if (last_h_ && pending_reward_) {
    step(*pending_reward_ + cfg_.gamma * q[a]);
    pending_reward_.reset();
  }
  last_h_ = h[a];
  return a;
}

void SarsaLearner::observe(double reward, bool terminal) {
  if (!last_h_) throw Error("reward observed before any action");
  pending_reward_ = reward;
  if (terminal) {
    step(reward);
    last_h_.reset();
    pending_reward_.reset();
  }
}

}  // namespace secure
