#include "secure/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <type_traits>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "secure/error.hpp"

namespace secure {

std::string prior_mode_name(PriorMode m) {
  switch (m) {
    case PriorMode::neutral:
      return "neutral";
    case PriorMode::optimistic:
      return "optimistic";
    case PriorMode::pessimistic:
      return "pessimistic";
  }
  return "neutral";
}

PriorMode prior_mode_from_name(std::string_view name) {
  if (name == "neutral" || name == "default") return PriorMode::neutral;
  if (name == "optimistic") return PriorMode::optimistic;
  if (name == "pessimistic") return PriorMode::pessimistic;
  throw ConfigError("unknown prior mode '" + std::string(name) + "'");
}

void EpisodeConfig::validate() const {
  if (attempts < 1) throw ConfigError("attempts cap must be at least 1");
  costs.validate();
  for (double p : {neutral_prior, optimistic_prior, pessimistic_prior})
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("priors must lie in [0, 1]");
}

double F1Counts::f1() const {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

namespace {

std::vector<std::string> instruction_unary_symbols(const TaskInstruction& t) {
  std::vector<std::string> out;
  for (const RefForm* r : {&t.direct, &t.indirect})
    for (const auto& s : r->restrictor.symbols())
      if (s.arity == 1 && std::find(out.begin(), out.end(), s.name) == out.end()) out.push_back(s.name);
  return out;
}

}  // namespace

F1Counts grounding_f1(const BeliefState& b, const Scene& scene, const TaskInstruction& t) {
  F1Counts c;
  for (const auto& name : instruction_unary_symbols(t)) {
    const auto s = b.symbol_index(name);
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
      const auto& attrs = scene.objects[o].attributes;
      const bool truth = std::find(attrs.begin(), attrs.end(), name) != attrs.end();
      bool predicted = false;
      if (s) {
        const auto bo = b.base.object_index(scene.objects[o].id);
        if (!bo) throw Error("belief and scene disagree on objects");
        predicted = b.grounded[b.base.unary_index(*s, *bo)] >= 0.5;
      }
      if (predicted && truth)
        ++c.tp;
      else if (predicted)
        ++c.fp;
      else if (truth)
        ++c.fn;
      else
        ++c.tn;
    }
  }
  return c;
}

Episode::Episode(PolicySpec policy, EpisodeConfig cfg, BeliefConfig belief_cfg, BeliefState belief, Scene scene,
                 Decider& decider)
    : policy_(policy),
      cfg_(std::move(cfg)),
      belief_cfg_(belief_cfg),
      belief_(std::move(belief)),
      scene_(std::move(scene)),
      decider_(&decider) {
  cfg_.validate();
  std::vector<std::vector<double>> embeddings;
  for (const auto& o : scene_.objects) embeddings.push_back(o.embedding);
  if (belief_.objects != scene_.ids() || belief_.embeddings != embeddings) {
    belief_ = change_scene(belief_, scene_.ids(), std::move(embeddings), belief_cfg_);
    sync_relations();
  }
}

double Episode::prior_for(const std::string& symbol) const {
  if (cfg_.prior_mode == PriorMode::neutral) return cfg_.neutral_prior;
  const auto c = scene_.schema.category_of(symbol);
  if (!c || scene_.schema.categories[*c].name != cfg_.biased_category) return cfg_.neutral_prior;
  return cfg_.prior_mode == PriorMode::optimistic ? cfg_.optimistic_prior : cfg_.pessimistic_prior;
}

void Episode::admit(const std::vector<Symbol>& symbols) {
  for (const auto& s : symbols) {
    if (belief_.knows(s.name)) continue;
    if (s.arity == 1) {
      const double p = prior_for(s.name);
      belief_ = add_neologism(belief_, s, p, belief_cfg_);
      events_.push_back({{"type", "neologism"}, {"symbol", s.name}, {"prior", p}});
    } else {
      const auto rel = relation_from_symbol(s.name);
      if (!rel) throw EvalError("unknown relation '" + s.name + "'");
      belief_ = set_relation(belief_, s.name, relation_pairs(scene_, *rel), belief_cfg_);
    }
  }
}

void Episode::sync_relations() {
  for (std::size_t s = 0; s < belief_.vocabulary.size(); ++s) {
    if (!belief_.fixed[s]) continue;
    const auto rel = relation_from_symbol(belief_.vocabulary[s].name);
    if (!rel) continue;
    belief_ = set_relation(belief_, belief_.vocabulary[s].name, relation_pairs(scene_, *rel), belief_cfg_);
  }
}

void Episode::assert_formula(const Formula& phi, const std::string& source) {
  std::vector<Formula> dropped;
  belief_ = update_with_recovery(belief_, phi, belief_cfg_, &dropped);
  events_.push_back({{"type", "update"}, {"source", source}, {"formula", phi.str()}});
  if (!dropped.empty()) {
    nlohmann::json d = nlohmann::json::array();
    for (const auto& f : dropped) d.push_back(f.str());
    events_.push_back({{"type", "recovery"}, {"dropped", d}});
  }
}

void Episode::instruct(const TaskInstruction& t) {
  if (instructed_) throw ProtocolError("the episode already has an instruction", "none");
  instructed_ = true;
  task_ = t;
  events_.push_back({{"type", "instruction"}, {"text", t.raw.empty() ? render_instruction(t) : t.raw}});
  std::vector<Symbol> symbols = t.direct.restrictor.symbols();
  for (const auto& s : t.indirect.restrictor.symbols()) symbols.push_back(s);
  admit(symbols);
  f1_ = grounding_f1(belief_, scene_, task_);
  events_.push_back({{"type", "f1_snapshot"}, {"tp", f1_.tp}, {"fp", f1_.fp}, {"fn", f1_.fn}, {"f1", f1_.f1()}});
  if (policy_.mode == AnalysisMode::secure) {
    for (const RefForm* r : {&task_.direct, &task_.indirect}) {
      const Formula p = presupposition(*r);
      if (p.kind() == Formula::Kind::truth) continue;
      derived_.push_back(p);
      assert_formula(p, "presupposition");
    }
  }
  decide();
}

const QuestionAction& Episode::question() const {
  if (pending_ != Pending::question) throw ProtocolError("no pending question", "question");
  return question_;
}

const ExecutionAction& Episode::action() const {
  if (pending_ != Pending::action) throw ProtocolError("no pending action", "action");
  return plan_[step_];
}

void Episode::decide() {
  pending_ = Pending::none;
  const auto actions = available_actions(policy_, task_, asked_);
  next_attempt_ = plan_attempt();
  DecisionContext ctx{&belief_, &belief_cfg_, &task_, policy_.mode, cfg_.costs, 8, std::nullopt};
  ctx.planned = next_attempt_->referents;
  std::vector<Features> h;
  for (const auto& a : actions) h.push_back(features(ctx, a));
  const std::size_t choice = decider_->choose(h);
  nlohmann::json options = nlohmann::json::array();
  for (std::size_t i = 0; i < actions.size(); ++i)
    options.push_back({{"action", actions[i].str()}, {"info_gain", h[i][0]}, {"expected_reward", h[i][1]}});
  events_.push_back({{"type", "decision"}, {"options", options}, {"choice", actions[choice].str()}});
  if (actions[choice].kind == AgentAction::Kind::ask) {
    question_ = actions[choice].question;
    pending_ = Pending::question;
    events_.push_back({{"type", "question"}, {"text", question_.surface}, {"logical_form", question_.refexp.str()}});
    return;
  }
  start_attempt();
}

namespace {

std::size_t designation_size(const Quantifier& q, const std::vector<double>& p) {
  const auto likely = static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](double v) { return v >= 0.5; }));
  switch (q.kind) {
    case QuantifierKind::a:
      return 1;
    case QuantifierKind::both:
      return 2;
    case QuantifierKind::the_n:
    case QuantifierKind::exactly_n:
    case QuantifierKind::at_least_n:
    case QuantifierKind::n_of_the_m:
      return static_cast<std::size_t>(q.n);
    case QuantifierKind::at_most_n:
      return std::min<std::size_t>(static_cast<std::size_t>(q.n), std::max<std::size_t>(likely, 1));
    case QuantifierKind::every:
      return std::max<std::size_t>(likely, 1);
    case QuantifierKind::all_but_n:
      return std::max<std::size_t>(likely > static_cast<std::size_t>(q.n) ? likely - static_cast<std::size_t>(q.n) : 0, 1);
  }
  return 1;
}

}  // namespace

Episode::Attempt Episode::plan_attempt() const {
  const DomainModel map = map_model(belief_, belief_cfg_);
  const Referent direct = referent_of(map, task_.direct);
  const Referent indirect = referent_of(map, task_.indirect);
  std::string failure;
  if (direct.empty()) {
    failure = "reference failure: " + render_refexp(task_.direct);
  } else if (indirect.empty()) {
    failure = "reference failure: " + render_refexp(task_.indirect);
  } else {
    for (const auto& d : direct) {
      for (const auto& l : indirect) {
        try {
          return {plan_with(d, l, task_, scene_), {d, l}, "map"};
        } catch (const PlanningError& e) {
          if (failure.empty()) failure = e.what();
        }
      }
    }
  }

  // Most probable objects for each restrictor, one side chosen first.
  const Conditioner cond = grounded_conditioner(belief_, belief_cfg_);
  auto choose = [&](const RefForm& r, const std::vector<ObjectId>& exclude) {
    std::vector<double> p;
    for (const auto& o : belief_.objects) p.push_back(cond.probability(r.restrictor.substitute(r.variable, o)));
    std::vector<std::size_t> order(p.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    std::vector<std::size_t> picked;
    const std::size_t k = designation_size(r.quantifier, p);
    for (auto i : order) {
      if (picked.size() == k) break;
      if (std::find(exclude.begin(), exclude.end(), belief_.objects[i]) != exclude.end()) continue;
      picked.push_back(i);
    }
    std::sort(picked.begin(), picked.end());
    std::vector<ObjectId> out;
    for (auto i : picked) out.push_back(belief_.objects[i]);
    return out;
  };
  for (bool direct_first : {true, false}) {
    PlannedReferents r;
    if (direct_first) {
      r.direct = choose(task_.direct, {});
      r.landmarks = choose(task_.indirect, r.direct);
    } else {
      r.landmarks = choose(task_.indirect, {});
      r.direct = choose(task_.direct, r.landmarks);
    }
    try {
      return {plan_with(r.direct, r.landmarks, task_, scene_), r, "fallback: " + failure};
    } catch (const PlanningError&) {
    }
  }
  return {{ExecutionAction{}}, {}, "no plan: " + failure};
}

void Episode::start_attempt() {
  ++attempts_;
  Attempt next = next_attempt_ ? std::move(*next_attempt_) : plan_attempt();
  next_attempt_.reset();
  plan_ = std::move(next.plan);
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& a : plan_) steps.push_back(describe(a));
  events_.push_back({{"type", "attempt"}, {"number", attempts_}, {"plan", steps}, {"planner", next.source}});
  step_ = 0;
  execute_next();
}

void Episode::execute_next() {
  const ExecutionAction& a = plan_[step_];
  Scene before = apply_action(scene_, a);
  if (a.kind == ActionKind::pick) before_pick_ = before;
  before_action_ = std::move(before);
  if (a.kind == ActionKind::place) sync_relations();
  pending_ = Pending::action;
  events_.push_back({{"type", "action"}, {"action", describe(a)}});
}

void Episode::reward(double r, bool terminal) {
  reward_ += r;
  if (r < 0.0) cost_ += r;
  events_.push_back({{"type", "reward"}, {"value", r}});
  decider_->observe(r, terminal);
}

void Episode::finish(bool solved) {
  finished_ = true;
  solved_ = solved;
  pending_ = Pending::none;
  events_.push_back({{"type", "end"}, {"solved", solved}, {"attempts", attempts_}});
}

void Episode::answer(const std::optional<std::vector<ObjectId>>& designation) {
  if (pending_ != Pending::question) throw ProtocolError("no question is pending", "question");
  const QuestionAction q = question_;
  double c = 0.0;
  if (!designation) {
    c = question_cost(q, cfg_.costs, 0);
    events_.push_back({{"type", "answer"}, {"reference_failure", true}});
  } else {
    for (const auto& o : *designation) scene_.index_of(o);
    const Formula phi = sentence_semantics(q.refexp, *designation, belief_.objects, policy_.mode);
    c = question_cost(q, cfg_.costs, designation->size());
    events_.push_back({{"type", "answer"}, {"objects", *designation}});
    derived_.push_back(phi);
    assert_formula(phi, "answer");
  }
  if (cfg_.forbid_terminal_questions && c >= 1.0)
    throw ConfigError("a question cost reached 1 and would end the learning episode");
  asked_.push_back(q);
  pending_ = Pending::none;
  reward(-c, false);
  decide();
}

void Episode::accept() {
  if (pending_ != Pending::action) throw ProtocolError("no executed action awaits feedback", "action");
  if (plan_[step_].kind == ActionKind::complete) {
    events_.push_back({{"type", "complete"}, {"success", true}});
    reward(1.0, true);
    finish(true);
    return;
  }
  ++step_;
  execute_next();
}

void Episode::correct(const Correction& c) {
  if (pending_ != Pending::action) throw ProtocolError("no executed action awaits feedback", "action");
  const ExecutionAction a = plan_[step_];
  admit(c.refexp.restrictor.symbols());
  const Formula phi = correction_semantics(a.kind, task_, c);
  if (a.kind == ActionKind::place)
    scene_ = *before_pick_;
  else if (a.kind == ActionKind::pick)
    scene_ = *before_action_;
  sync_relations();
  events_.push_back({{"type", "correction"}, {"after", action_name(a.kind)}, {"text", c.raw}, {"object", c.designated}});
  derived_.push_back(phi);
  assert_formula(phi, "correction");
  pending_ = Pending::none;
  reward(-1.0, true);
  if (cfg_.stop_at_terminal || attempts_ >= cfg_.attempts) {
    finish(false);
    return;
  }
  decide();
}

namespace {

struct SoundnessCheck {
  std::size_t checked = 0;
  std::size_t violated = 0;

  void run(const Episode& ep, std::size_t& seen) {
    const auto& derived = ep.derived();
    if (seen == derived.size()) return;
    const DomainModel truth = ground_truth(ep.scene());
    for (; seen < derived.size(); ++seen) {
      ++checked;
      try {
        if (!eval_formula(truth, derived[seen])) ++violated;
      } catch (const EvalError&) {
        ++violated;
      }
    }
  }
};

}  // namespace

EpisodeResult run_episode(const PolicySpec& policy, const EpisodeConfig& cfg, const BeliefConfig& belief_cfg,
                          BeliefState& belief, const Scene& scene, const TaskInstruction& t, Decider& decider,
                          OracleTeacher& oracle) {
  decider.begin_episode();
  Episode ep(policy, cfg, belief_cfg, std::move(belief), scene, decider);
  SoundnessCheck soundness;
  std::size_t seen = 0;
  ep.instruct(t);
  soundness.run(ep, seen);
  for (int guard = 0; !ep.finished(); ++guard) {
    if (guard > 10000) throw Error("episode did not terminate");
    if (ep.pending() == Episode::Pending::question) {
      const OracleReply reply = oracle.answer(ep.scene(), ep.question().refexp);
      if (reply.kind == OracleReply::Kind::answer)
        ep.answer(reply.designation);
      else
        ep.answer(std::nullopt);
    } else if (ep.pending() == Episode::Pending::action) {
      const OracleReply reply = oracle.respond(ep.scene(), t, ep.action());
      if (reply.kind == OracleReply::Kind::correction)
        ep.correct(parse_correction(reply.text, {reply.corrected}));
      else
        ep.accept();
    } else {
      break;
    }
    soundness.run(ep, seen);
  }

  EpisodeResult r;
  r.transcript = {{"task", t.raw}, {"scene_seed", scene.seed}, {"events", ep.events()}};
  r.reward = ep.reward();
  r.cost = ep.cost();
  r.solved = ep.solved();
  r.attempts = ep.attempts();
  r.f1 = ep.f1();
  r.oracle_formulas = soundness.checked;
  r.oracle_violations = soundness.violated;
  r.final_scene = ep.scene();
  belief = ep.take_belief();
  return r;
}

void ExperimentConfig::validate() const {
  if (episodes < 1 || runs < 1) throw ConfigError("episodes and runs must be positive");
  if (policies.empty()) throw ConfigError("at least one policy is required");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  episode.validate();
  belief.grounding.validate();
  params.validate();
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.episodes = j.value("episodes", c.episodes);
  c.runs = j.value("runs", c.runs);
  c.seed = j.value("seed", c.seed);
  if (j.contains("policies")) {
    c.policies.clear();
    for (const auto& p : j["policies"]) c.policies.push_back(policy_from_name(p.get<std::string>()));
  }
  c.episode.attempts = j.value("attempts", c.episode.attempts);
  c.episode.costs.c_point = j.value("c_point", c.episode.costs.c_point);
  c.episode.costs.c_ref = j.value("c_ref", c.episode.costs.c_ref);
  c.episode.prior_mode = prior_mode_from_name(j.value("prior_mode", std::string("neutral")));
  c.belief.grounding.tau = j.value("tau", c.belief.grounding.tau);
  c.belief.grounding.scale = j.value("scale", c.belief.grounding.scale);
  const std::string sign = j.value("sign_mode", std::string("corrected"));
  if (sign == "corrected")
    c.belief.grounding.sign_mode = SignMode::corrected;
  else if (sign == "literal")
    c.belief.grounding.sign_mode = SignMode::literal;
  else
    throw ConfigError("unknown sign mode '" + sign + "'");
  c.belief.wmc.max_coupled_atoms = j.value("max_coupled_atoms", c.belief.wmc.max_coupled_atoms);
  if (j.contains("theta")) {
    const auto th = j["theta"].get<std::vector<double>>();
    if (th.size() != 2) throw ConfigError("theta must have two entries");
    c.params.theta = {th[0], th[1]};
  }
  c.epsilon = j.value("epsilon", c.epsilon);
  const std::string schema = j.value("schema", std::string("blocksworld"));
  if (schema == "blocksworld")
    c.scene.schema = Schema::blocksworld();
  else if (schema == "orchard")
    c.scene.schema = Schema::orchard();
  else
    throw ConfigError("unknown schema '" + schema + "'");
  c.scene.min_objects = j.value("min_objects", c.scene.min_objects);
  c.scene.max_objects = j.value("max_objects", c.scene.max_objects);
  c.scene.noise_sigma = j.value("noise_sigma", c.scene.noise_sigma);
  c.threads = j.value("threads", c.threads);
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const std::set<std::string> known{"episodes", "runs",      "seed",        "policies",    "attempts",
                                             "c_point",  "c_ref",     "prior_mode",  "tau",         "scale",
                                             "sign_mode", "max_coupled_atoms", "theta", "epsilon",  "schema",
                                             "min_objects", "max_objects", "noise_sigma", "threads"};
    if (!known.contains(it.key())) throw ConfigError("unknown configuration key '" + it.key() + "'");
  }
  c.validate();
  return c;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json policies = nlohmann::json::array();
  for (auto p : c.policies) policies.push_back(policy_name(p));
  return {{"episodes", c.episodes},
          {"runs", c.runs},
          {"seed", c.seed},
          {"policies", policies},
          {"attempts", c.episode.attempts},
          {"c_point", c.episode.costs.c_point},
          {"c_ref", c.episode.costs.c_ref},
          {"prior_mode", prior_mode_name(c.episode.prior_mode)},
          {"tau", c.belief.grounding.tau},
          {"scale", c.belief.grounding.scale},
          {"sign_mode", c.belief.grounding.sign_mode == SignMode::corrected ? "corrected" : "literal"},
          {"max_coupled_atoms", c.belief.wmc.max_coupled_atoms},
          {"theta", {c.params.theta[0], c.params.theta[1]}},
          {"epsilon", c.epsilon},
          {"schema", c.scene.schema.name},
          {"min_objects", c.scene.min_objects},
          {"max_objects", c.scene.max_objects},
          {"noise_sigma", c.scene.noise_sigma},
          {"threads", c.threads}};
}

Metrics compute_metrics(const std::vector<EpisodeRecord>& records) {
  Metrics m;
  double f1 = 0.0;
  for (const auto& r : records) {
    m.cr += r.reward;
    m.cc += r.cost;
    m.solved += r.solved ? 1 : 0;
    f1 += r.f1;
  }
  m.mf1 = records.empty() ? 0.0 : f1 / static_cast<double>(records.size());
  return m;
}

std::vector<EpisodeRecord> ExperimentResult::cell(PolicyKind policy, int run) const {
  std::vector<EpisodeRecord> out;
  for (const auto& r : records)
    if (r.policy == policy && r.run == run) out.push_back(r);
  return out;
}

Metrics ExperimentResult::metrics(PolicyKind policy, int run) const { return compute_metrics(cell(policy, run)); }

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0, std::uint64_t d = 0) {
  return mix(mix(mix(mix(a) ^ b) ^ c) ^ d);
}

}  // namespace

std::vector<TaskSpec> task_stream(std::uint64_t seed, int run, int episodes, const SceneSpec& spec) {
  std::vector<TaskSpec> out;
  for (int e = 0; e < episodes; ++e) {
    const auto r = static_cast<std::uint64_t>(run);
    const auto ep = static_cast<std::uint64_t>(e);
    TaskSpec t;
    for (std::uint64_t retry = 0;; ++retry) {
      t.scene = generate_scene(mix(seed, r, ep, retry), spec);
      std::mt19937_64 rng(mix(seed, r, ep, 1000 + retry));
      try {
        t.task = generate_task(t.scene, rng);
        break;
      } catch (const PlanningError&) {
        if (retry > 100) throw;
      }
    }
    t.oracle_seed = mix(seed, r, ep, 77);
    out.push_back(std::move(t));
  }
  return out;
}

CurvePoint confidence_interval(const std::vector<double>& xs) {
  CurvePoint p;
  if (xs.empty()) return p;
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  p.mean = p.lo = p.hi = mean;
  if (xs.size() < 2) return p;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  const double half = t * sd / std::sqrt(n);
  p.lo = mean - half;
  p.hi = mean + half;
  return p;
}

SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("sign test needs paired samples");
  SignTest s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i])
      ++s.positive;
    else if (a[i] < b[i])
      ++s.negative;
  }
  const std::size_t n = s.positive + s.negative;
  if (n == 0 || s.positive == 0) {
    s.p_value = 1.0;
    return s;
  }
  const boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
  s.p_value = boost::math::cdf(boost::math::complement(dist, static_cast<double>(s.positive) - 1.0));
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::vector<TaskSpec>> streams(static_cast<std::size_t>(cfg.runs));
  for (int r = 0; r < cfg.runs; ++r) streams[static_cast<std::size_t>(r)] = task_stream(cfg.seed, r, cfg.episodes, cfg.scene);

  struct Cell {
    int run;
    PolicyKind policy;
    std::vector<EpisodeRecord> records;
  };
  std::vector<Cell> cells;
  for (auto p : cfg.policies)
    for (int r = 0; r < cfg.runs; ++r) cells.push_back({r, p, {}});

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      Cell& cell = cells[i];
      try {
        const PolicySpec spec = make_policy(cell.policy);
        EpsilonGreedy decider(cfg.params, cfg.epsilon, mix(cfg.seed, static_cast<std::uint64_t>(cell.run), 99));
        BeliefState belief = make_belief({}, {});
        for (int e = 0; e < cfg.episodes; ++e) {
          const TaskSpec& ts = streams[static_cast<std::size_t>(cell.run)][static_cast<std::size_t>(e)];
          OracleTeacher oracle(ts.oracle_seed);
          EpisodeResult res = run_episode(spec, cfg.episode, cfg.belief, belief, ts.scene, ts.task, decider, oracle);
          EpisodeRecord rec;
          rec.run = cell.run;
          rec.episode = e;
          rec.policy = cell.policy;
          rec.reward = res.reward;
          rec.cost = res.cost;
          rec.solved = res.solved;
          rec.attempts = res.attempts;
          rec.f1 = res.f1.f1();
          rec.oracle_formulas = res.oracle_formulas;
          rec.oracle_violations = res.oracle_violations;
          rec.transcript = std::move(res.transcript);
          cell.records.push_back(std::move(rec));
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(cells.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  ExperimentResult result;
  result.config = cfg;
  for (auto& c : cells)
    for (auto& r : c.records) result.records.push_back(std::move(r));

  for (auto p : cfg.policies) {
    PolicyCurves curves;
    curves.policy = p;
    std::vector<std::vector<EpisodeRecord>> per_run;
    for (int r = 0; r < cfg.runs; ++r) per_run.push_back(result.cell(p, r));
    for (int e = 0; e < cfg.episodes; ++e) {
      std::vector<double> cr, cc, mf1;
      for (const auto& recs : per_run) {
        double sr = 0.0, sc = 0.0, sf = 0.0;
        for (int k = 0; k <= e; ++k) {
          sr += recs[static_cast<std::size_t>(k)].reward;
          sc += recs[static_cast<std::size_t>(k)].cost;
          sf += recs[static_cast<std::size_t>(k)].f1;
        }
        cr.push_back(sr);
        cc.push_back(sc);
        mf1.push_back(sf / (e + 1));
      }
      CurvePoint a = confidence_interval(cr), b = confidence_interval(cc), c = confidence_interval(mf1);
      a.episode = b.episode = c.episode = e + 1;
      curves.cr.push_back(a);
      curves.cc.push_back(b);
      curves.mf1.push_back(c);
    }
    result.curves.push_back(std::move(curves));
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

nlohmann::json experiment_summary(const ExperimentResult& r) {
  nlohmann::json cells = nlohmann::json::array();
  std::size_t formulas = 0, violations = 0;
  for (auto p : r.config.policies) {
    for (int run = 0; run < r.config.runs; ++run) {
      const Metrics m = r.metrics(p, run);
      cells.push_back({{"policy", policy_name(p)}, {"run", run}, {"cR", m.cr}, {"cC", m.cc}, {"mF1", m.mf1},
                       {"solved", m.solved}});
    }
  }
  for (const auto& rec : r.records) {
    formulas += rec.oracle_formulas;
    violations += rec.oracle_violations;
  }
  nlohmann::json finals = nlohmann::json::object();
  for (const auto& c : r.curves) {
    auto point = [](const CurvePoint& p) { return nlohmann::json{{"mean", p.mean}, {"lo", p.lo}, {"hi", p.hi}}; };
    finals[policy_name(c.policy)] = {{"cR", point(c.cr.back())}, {"cC", point(c.cc.back())}, {"mF1", point(c.mf1.back())}};
  }
  nlohmann::json tests = nlohmann::json::array();
  for (std::size_t i = 0; i < r.config.policies.size(); ++i) {
    for (std::size_t j = 0; j < r.config.policies.size(); ++j) {
      if (i == j) continue;
      std::vector<double> a, b;
      for (int run = 0; run < r.config.runs; ++run) {
        for (const auto& rec : r.cell(r.config.policies[i], run)) a.push_back(rec.reward);
        for (const auto& rec : r.cell(r.config.policies[j], run)) b.push_back(rec.reward);
      }
      const SignTest t = sign_test(a, b);
      tests.push_back({{"better", policy_name(r.config.policies[i])},
                       {"worse", policy_name(r.config.policies[j])},
                       {"positive", t.positive},
                       {"negative", t.negative},
                       {"p_value", t.p_value}});
    }
  }
  return {{"config", experiment_config_to_json(r.config)},
          {"seconds", r.seconds},
          {"cells", cells},
          {"final", finals},
          {"sign_tests", tests},
          {"oracle", {{"formulas", formulas}, {"violations", violations}}}};
}

std::string curves_csv(const ExperimentResult& r) {
  std::ostringstream out;
  out << "policy,episode,cr_mean,cr_lo,cr_hi,cc_mean,cc_lo,cc_hi,mf1_mean,mf1_lo,mf1_hi\n";
  out.precision(10);
  for (const auto& c : r.curves) {
    for (std::size_t e = 0; e < c.cr.size(); ++e) {
      out << policy_name(c.policy) << ',' << c.cr[e].episode << ',' << c.cr[e].mean << ',' << c.cr[e].lo << ','
          << c.cr[e].hi << ',' << c.cc[e].mean << ',' << c.cc[e].lo << ',' << c.cc[e].hi << ',' << c.mf1[e].mean
          << ',' << c.mf1[e].lo << ',' << c.mf1[e].hi << '\n';
    }
  }
  return out.str();
}

std::string transcripts_jsonl(const ExperimentResult& r) {
  std::string out;
  for (const auto& rec : r.records) {
    nlohmann::json j = rec.transcript;
    j["run"] = rec.run;
    j["episode"] = rec.episode;
    j["policy"] = policy_name(rec.policy);
    j["reward"] = rec.reward;
    j["cost"] = rec.cost;
    j["solved"] = rec.solved;
    j["f1"] = rec.f1;
    out += j.dump();
    out += '\n';
  }
  return out;
}

TrainingConfig training_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("training configuration must be a JSON object");
  TrainingConfig c;
  nlohmann::json rest = j;
  auto take = [&](const char* key, auto& field) {
    if (!rest.contains(key)) return;
    field = rest[key].get<std::decay_t<decltype(field)>>();
    rest.erase(key);
  };
  std::string policy = policy_name(c.policy);
  take("policy", policy);
  c.policy = policy_from_name(policy);
  take("alpha", c.sarsa.alpha);
  take("gamma", c.sarsa.gamma);
  take("epsilon", c.sarsa.epsilon);
  take("m", c.sarsa.m);
  take("theta_bound", c.sarsa.theta_bound);
  if (!rest.contains("episodes")) rest["episodes"] = c.episodes;
  if (!rest.contains("seed")) rest["seed"] = c.seed;
  const ExperimentConfig base = experiment_config_from_json(rest);
  c.episodes = base.episodes;
  c.seed = base.seed;
  c.initial = base.params;
  c.episode = base.episode;
  c.belief = base.belief;
  c.scene = base.scene;
  c.sarsa.validate();
  return c;
}

std::string training_csv(const TrainingResult& r) {
  std::ostringstream out;
  out.precision(10);
  out << "step,reward,theta1,theta2\n";
  for (std::size_t i = 0; i < r.steps.size(); ++i)
    out << i << ',' << r.steps[i].reward << ',' << r.steps[i].theta.theta[0] << ',' << r.steps[i].theta.theta[1] << '\n';
  return out.str();
}

TrainingResult train_policy(const TrainingConfig& cfg) {
  cfg.sarsa.validate();
  EpisodeConfig ep_cfg = cfg.episode;
  ep_cfg.stop_at_terminal = true;
  ep_cfg.forbid_terminal_questions = true;
  const PolicySpec spec = make_policy(cfg.policy);
  SarsaLearner learner(cfg.initial, cfg.sarsa, mix(cfg.seed, 5));
  BeliefState belief = make_belief({}, {});
  TrainingResult out;
  int e = 0;
  for (std::uint64_t env = 0; e < cfg.episodes; ++env) {
    Scene scene = generate_scene(mix(cfg.seed, env, 11), cfg.scene);
    std::mt19937_64 task_rng(mix(cfg.seed, env, 12));
    for (int k = 0; k < cfg.sarsa.m && e < cfg.episodes; ++k, ++e) {
      TaskInstruction t;
      try {
        t = generate_task(scene, task_rng);
      } catch (const PlanningError&) {
        break;
      }
      OracleTeacher oracle(mix(cfg.seed, env, 13 + static_cast<std::uint64_t>(k)));
      EpisodeResult r = run_episode(spec, ep_cfg, cfg.belief, belief, scene, t, learner, oracle);
      out.episode_rewards.push_back(r.reward);
      scene = r.final_scene;
    }
  }
  out.params = learner.params();
  out.steps = learner.history();
  return out;
}

std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window) {
  std::vector<double> out;
  if (window == 0 || xs.size() < window) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= window) sum -= xs[i - window];
    if (i + 1 >= window) out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

}  // namespace secure
