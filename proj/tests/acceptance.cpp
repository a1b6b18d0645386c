// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "goldens.hpp"
#include "refgen.hpp"
#include "secure/discourse.hpp"
#include "secure/grounding.hpp"
#include "secure/harness.hpp"
#include "secure/logic.hpp"
#include "secure/parser.hpp"
#include "secure/policy.hpp"
#include "secure/wmc.hpp"
#include "wmcgen.hpp"

using namespace secure;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void quantifier_oracle() {
  const auto t0 = Clock::now();
  std::vector<Quantifier> qs = {Quantifier::existential(), Quantifier::universal(), Quantifier::both()};
  for (int n = 0; n <= 5; ++n) {
    qs.push_back(Quantifier::exactly(n));
    qs.push_back(Quantifier::at_most(n));
    qs.push_back(Quantifier::at_least(n));
    qs.push_back(Quantifier::all_but(n));
    if (n >= 1) qs.push_back(Quantifier::the(n));
    for (int m = n; m <= 5; ++m)
      if (m >= 1) qs.push_back(Quantifier::n_of_the(n, m));
  }
  std::size_t checked = 0, agree = 0;
  for (int n = 0; n <= 4; ++n) {
    std::vector<ObjectId> objs;
    for (int i = 0; i < n; ++i) objs.push_back("o" + std::to_string(i));
    for (unsigned ext = 0; ext < (1u << n); ++ext) {
      DomainModel m(objs, {{"p", 1}});
      const std::size_t r = std::popcount(ext);
      for (int i = 0; i < n; ++i)
        if (ext >> i & 1u) m.add("p", {objs[i]});
      for (const auto& q : qs) {
        const std::size_t qn = static_cast<std::size_t>(q.n);
        Referent expect;
        for (unsigned sub = 0; sub < (1u << n); ++sub) {
          if ((sub & ~ext) != 0) continue;
          const std::size_t k = std::popcount(sub);
          bool ok = false;
          switch (q.kind) {
            case QuantifierKind::exactly_n: ok = k == qn; break;
            case QuantifierKind::at_most_n: ok = k <= qn; break;
            case QuantifierKind::at_least_n: ok = k >= qn; break;
            case QuantifierKind::a: ok = k == 1; break;
            case QuantifierKind::every: ok = k == r; break;
            case QuantifierKind::the_n: ok = k == r && r == qn; break;
            case QuantifierKind::both: ok = k == r && r == 2; break;
            case QuantifierKind::all_but_n: ok = r > qn && k == r - qn; break;
            case QuantifierKind::n_of_the_m: ok = r == static_cast<std::size_t>(q.m) && k == qn; break;
          }
          if (!ok) continue;
          std::vector<ObjectId> set;
          for (int i = 0; i < n; ++i)
            if (sub >> i & 1u) set.push_back(objs[i]);
          expect.push_back(set);
        }
        auto got = referent_of(m, {q, "x", Formula::atom("p", "x")});
        std::sort(expect.begin(), expect.end());
        std::sort(got.begin(), got.end());
        ++checked;
        agree += got == expect;
      }
    }
  }
  const double s = since(t0);
  report("quantifier-oracle", agree == checked && s < 10.0,
         fmt("%zu/%zu referents agree, %zu quantifiers, %.2f s", agree, checked, qs.size(), s));
}

void wmc_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  int exact = 0, complement = 0;
  double worst = 0.0;
  const int instances = 500;
  for (int i = 0; i < instances; ++i) {
    const auto inst = wmcgen::random_instance(rng, 14);
    const double got = wmc(inst.phi, inst.weights, inst.base);
    const double want = wmcgen::brute_force(inst.phi, inst.weights, inst.base);
    worst = std::max(worst, std::abs(got - want));
    exact += std::abs(got - want) <= 1e-9;
    const double neg = wmc(Formula::negate(inst.phi), inst.weights, inst.base);
    const double top = wmc(Formula::top(), inst.weights, inst.base);
    complement += std::abs(got + neg - top) <= 1e-9;
  }
  const double s = since(t0);
  report("wmc-exactness", exact == instances && complement == instances && s < 60.0,
         fmt("%d/%d match brute force (max error %.2e), %d/%d complement, %.2f s", exact, instances, worst,
             complement, instances, s));
}

void entropy_threshold() {
  const auto [lo, hi] = admission_bounds(0.65);
  report("entropy-threshold", std::abs(lo - 0.354) <= 1e-3 && std::abs(hi - 0.646) <= 1e-3,
         fmt("bounds %.4f / %.4f", lo, hi));
}

void worked_examples() {
  std::vector<std::string> bad;
  const Formula xi = sentence_semantics(parse_refexp("the one granny smith"), std::vector<ObjectId>{"o"},
                                        {"o", "o'", "o''"}, AnalysisMode::secure);
  if (xi.str() != "grannysmith(o) & neg(grannysmith(o')) & neg(grannysmith(o''))") bad.push_back("xi: " + xi.str());

  const TaskInstruction t = parse_instruction("move every cube in front of a cylinder");
  const struct {
    ActionKind action;
    const char* text;
    const char* expect;
  } corrections[] = {{ActionKind::pick, "No. This is a cylinder.", "cylinder(o) & neg(cube(o))"},
                     {ActionKind::place, "No. This is a sphere.", "sphere(o) & neg(cylinder(o))"},
                     {ActionKind::complete, "No. This is a cube.", "cube(o)"}};
  for (const auto& c : corrections) {
    const Formula z = correction_semantics(c.action, t, parse_correction(c.text, {"o"}));
    if (z.str() != c.expect) bad.push_back("zeta: " + z.str());
  }

  std::vector<std::string> surfaces;
  for (const auto& q : generate_questions(parse_instruction("move every red cylinder to the left of the one cube")))
    surfaces.push_back(q.surface);
  if (surfaces != std::vector<std::string>{"show me every red cylinder", "show me a red cylinder",
                                           "show me the one cube", "show me a cube", "show me every cube"})
    bad.push_back("question set");

  const CostConfig costs;
  const double c = question_cost(make_question(parse_refexp("the one red cube")), costs, 1);
  if (std::abs(c - (costs.c_point + 2 * costs.c_ref)) > 1e-12) bad.push_back(fmt("cost %.3f", c));

  std::string detail = bad.empty() ? "xi, 3 corrections, 5 questions, cost 0.3" : "";
  for (const auto& b : bad) detail += b + "; ";
  report("worked-examples", bad.empty(), detail);
}

void parser_goldens() {
  int golden = 0;
  for (const auto& [text, form] : refexp_goldens()) {
    try {
      golden += parse_refexp(text).str() == form;
    } catch (const std::exception&) {
    }
  }
  std::mt19937_64 rng(99);
  int trips = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const RefForm r = refgen::random_refform(rng);
    try {
      trips += parse_refexp(render_refexp(r)) == r && parse_refform(r.str()) == r;
    } catch (const std::exception&) {
    }
  }
  const int total = static_cast<int>(refexp_goldens().size());
  report("parser-goldens", golden == total && trips == n,
         fmt("%d/%d goldens, %d/%d round trips", golden, total, trips, n));
}

ExperimentConfig base_config(PriorMode prior) {
  ExperimentConfig cfg;
  cfg.episodes = 30;
  cfg.runs = 3;
  cfg.episode.prior_mode = prior;
  return cfg;
}

// (cR, cC) recomputed from the reward events alone.
std::pair<double, double> transcript_totals(const nlohmann::json& transcript) {
  double cr = 0.0, cc = 0.0;
  for (const auto& e : transcript.at("events"))
    if (e.at("type") == "reward") {
      const double v = e.at("value").get<double>();
      cr += v;
      if (v < 0.0) cc += v;
    }
  return {cr, cc};
}

void metric_identity(const ExperimentResult& r) {
  std::size_t ok = 0;
  for (const auto& rec : r.records) {
    const auto [cr, cc] = transcript_totals(rec.transcript);
    const double solved = rec.solved ? 1.0 : 0.0;
    ok += std::abs(cr - cc - solved) <= 1e-9 && std::abs(cr - rec.reward) <= 1e-9 && std::abs(cc - rec.cost) <= 1e-9;
  }
  report("metric-identity", ok == r.records.size(),
         fmt("%zu/%zu transcripts with cR - cC = solved", ok, r.records.size()));
}

void policy_ordering(const ExperimentResult& r) {
  int ordered = 0;
  std::string per_run;
  for (int run = 0; run < r.config.runs; ++run) {
    const double a = r.metrics(PolicyKind::secure, run).mf1, b = r.metrics(PolicyKind::simple, run).mf1,
                 c = r.metrics(PolicyKind::correct, run).mf1;
    ordered += a >= b && b >= c;
    per_run += fmt(" run%d %.3f/%.3f/%.3f", run, a, b, c);
  }
  std::vector<double> secure_r, correct_r;
  for (int run = 0; run < r.config.runs; ++run) {
    for (const auto& e : r.cell(PolicyKind::secure, run)) secure_r.push_back(e.reward);
    for (const auto& e : r.cell(PolicyKind::correct, run)) correct_r.push_back(e.reward);
  }
  const SignTest st = sign_test(secure_r, correct_r);
  const bool ok = ordered >= 2 && st.p_value < 0.05 && r.seconds <= 1800.0;
  report("policy-ordering", ok,
         fmt("mF1 secure>=simple>=correct in %d/3 runs (%s), sign test +%zu/-%zu p=%.4f, %.1f s", ordered,
             per_run.c_str() + 1, st.positive, st.negative, st.p_value, r.seconds));
  auto final_mf1 = [&](PolicyKind p) {
    for (const auto& c : r.curves)
      if (c.policy == p) return c.mf1.back().mean;
    return 0.0;
  };
  std::printf("  reference: final mF1 secure %.3f, simple %.3f, correct %.3f (secure-simple %+.3f, secure-correct %+.3f)\n",
              final_mf1(PolicyKind::secure), final_mf1(PolicyKind::simple), final_mf1(PolicyKind::correct),
              final_mf1(PolicyKind::secure) - final_mf1(PolicyKind::simple),
              final_mf1(PolicyKind::secure) - final_mf1(PolicyKind::correct));
}

void biased_priors(const ExperimentResult& pessimistic, const ExperimentResult& optimistic) {
  std::vector<CurvePoint> finals;
  std::string detail;
  for (const auto& c : pessimistic.curves) {
    finals.push_back(c.mf1.back());
    detail += fmt("%s [%.3f, %.3f] ", policy_name(c.policy).c_str(), c.mf1.back().lo, c.mf1.back().hi);
  }
  bool overlap = finals.size() == 3;
  for (std::size_t i = 0; i < finals.size(); ++i)
    for (std::size_t j = i + 1; j < finals.size(); ++j)
      overlap = overlap && finals[i].lo <= finals[j].hi && finals[j].lo <= finals[i].hi;
  const bool completed = optimistic.records.size() == 3u * 30u * 3u && pessimistic.records.size() == 3u * 30u * 3u;
  report("biased-priors", overlap && completed,
         "pessimistic final mF1 CIs " + detail + (completed ? "overlap check done; optimistic run complete" : "incomplete"));
}

void sarsa_smoke() {
  TrainingConfig cfg;
  cfg.episodes = 100;
  cfg.sarsa.alpha = 0.1;
  cfg.sarsa.gamma = 0.99;
  cfg.sarsa.epsilon = 0.1;
  cfg.sarsa.m = 1;
  bool ok = false;
  std::string detail;
  try {
    const TrainingResult r = train_policy(cfg);
    const auto ma = moving_average(r.episode_rewards, 20);
    const bool finite = std::isfinite(r.params.theta[0]) && std::isfinite(r.params.theta[1]);
    ok = finite && !ma.empty() && ma.back() > ma.front();
    detail = fmt("theta [%.3f, %.3f], moving average %.3f -> %.3f", r.params.theta[0], r.params.theta[1],
                 ma.empty() ? 0.0 : ma.front(), ma.empty() ? 0.0 : ma.back());
  } catch (const std::exception& e) {
    detail = e.what();
  }
  report("sarsa-smoke", ok, detail);
}

void oracle_soundness(const std::vector<const ExperimentResult*>& runs) {
  std::size_t formulas = 0, violations = 0;
  for (const auto* r : runs)
    for (const auto& rec : r->records) {
      formulas += rec.oracle_formulas;
      violations += rec.oracle_violations;
    }
  report("oracle-soundness", violations == 0 && formulas > 0,
         fmt("%zu oracle formulas, %zu violated", formulas, violations));
}

}  // namespace

int main() {
  quantifier_oracle();
  wmc_exactness();
  entropy_threshold();
  worked_examples();
  parser_goldens();

  const ExperimentResult neutral = run_experiment(base_config(PriorMode::neutral));
  metric_identity(neutral);
  policy_ordering(neutral);
  const ExperimentResult pessimistic = run_experiment(base_config(PriorMode::pessimistic));
  const ExperimentResult optimistic = run_experiment(base_config(PriorMode::optimistic));
  biased_priors(pessimistic, optimistic);
  sarsa_smoke();
  oracle_soundness({&neutral, &pessimistic, &optimistic});
  return failures == 0 ? 0 : 1;
}
