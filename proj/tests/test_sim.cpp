#include <doctest.h>

#include <cmath>
#include <random>

#include "secure/error.hpp"
#include "secure/grounding.hpp"
#include "secure/sim.hpp"

using namespace secure;

namespace {

// Objects as (id, x, y, color, shape, texture).
Scene table(std::vector<std::tuple<std::string, double, double, std::string, std::string, std::string>> objs) {
  Scene s;
  s.schema = Schema::blocksworld();
  std::mt19937_64 rng(0);
  for (const auto& [id, x, y, c, sh, tx] : objs) {
    SceneObject o{id, {x, y}, {c, sh, tx}, {}};
    o.embedding = synth_embedding(s.schema, o.attributes, 0.0, rng);
    s.objects.push_back(o);
  }
  return s;
}

Scene cubes_and_cylinder() {
  return table({{"o1", 2, 2, "red", "cube", "plain"},
                {"o2", 5, 8, "blue", "cube", "dotted"},
                {"o3", 8, 5, "green", "cylinder", "star"},
                {"o4", 1, 9, "grey", "rectangle", "plain"}});
}

std::size_t count(const std::vector<ExecutionAction>& plan, ActionKind k) {
  return std::count_if(plan.begin(), plan.end(), [&](const ExecutionAction& a) { return a.kind == k; });
}

}  // namespace

TEST_CASE("scene generation") {
  SceneSpec spec;
  const Scene a = generate_scene(17, spec), b = generate_scene(17, spec);
  CHECK(a == b);
  CHECK(a.objects.size() >= 6);
  CHECK(a.objects.size() <= 7);
  for (std::size_t i = 0; i < a.objects.size(); ++i)
    for (std::size_t j = i + 1; j < a.objects.size(); ++j) {
      CHECK(std::abs(a.objects[i].position.x - a.objects[j].position.x) > a.epsilon);
      CHECK(std::abs(a.objects[i].position.y - a.objects[j].position.y) > a.epsilon);
    }
  spec.min_objects = spec.max_objects = 7;
  const Scene s = generate_scene(3, spec);
  CHECK(herbrand_base(s.ids(), s.schema.unary_symbols()).size() == 7 * 13);

  spec.min_objects = spec.max_objects = 500;
  CHECK_THROWS_AS(generate_scene(1, spec), ConfigError);
}

TEST_CASE("orchard scenes hold exactly two granny smiths") {
  SceneSpec spec;
  spec.schema = Schema::orchard();
  spec.required = {{"grannysmith", 2}};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scene s = generate_scene(seed, spec);
    CHECK(std::count_if(s.objects.begin(), s.objects.end(),
                        [](const SceneObject& o) { return o.attributes[0] == "grannysmith"; }) == 2);
  }
}

TEST_CASE("synthetic embeddings") {
  const Schema s = Schema::blocksworld();
  std::mt19937_64 rng(1);
  const auto a = synth_embedding(s, {"red", "cube", "plain"}, 0.0, rng);
  const auto b = synth_embedding(s, {"red", "cube", "plain"}, 0.0, rng);
  const auto c = synth_embedding(s, {"blue", "cube", "plain"}, 0.0, rng);
  CHECK(a == b);
  CHECK(a.size() == s.embedding_dim());
  const double sim = cosine_similarity(a, c);
  CHECK(sim > 0.0);
  CHECK(sim < 1.0);
}

TEST_CASE("attribute classes separate under noise") {
  const Schema s = Schema::blocksworld();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> pick(0, 1000);
  auto random_attrs = [&] {
    std::vector<std::string> attrs;
    for (const auto& c : s.categories) attrs.push_back(c.values[pick(rng) % c.values.size()]);
    return attrs;
  };
  // nearest class prototype per category, on held-out draws
  for (std::size_t cat = 0; cat < s.categories.size(); ++cat) {
    std::vector<std::vector<double>> proto(s.categories[cat].values.size());
    std::vector<int> n(proto.size());
    for (int i = 0; i < 400; ++i) {
      const auto attrs = random_attrs();
      const auto v = *s.category_of(attrs[cat]) == cat ? std::find(s.categories[cat].values.begin(), s.categories[cat].values.end(), attrs[cat]) - s.categories[cat].values.begin() : 0;
      const auto e = synth_embedding(s, attrs, 0.1, rng);
      if (proto[v].empty()) proto[v].assign(e.size(), 0.0);
      for (std::size_t k = 0; k < e.size(); ++k) proto[v][k] += e[k];
      ++n[v];
    }
    int right = 0, total = 0;
    for (int i = 0; i < 400; ++i) {
      const auto attrs = random_attrs();
      const auto e = synth_embedding(s, attrs, 0.1, rng);
      std::size_t best = 0;
      double best_sim = -2;
      for (std::size_t v = 0; v < proto.size(); ++v) {
        if (proto[v].empty()) continue;
        const double sim = cosine_similarity(e, proto[v]);
        if (sim > best_sim) best_sim = sim, best = v;
      }
      right += s.categories[cat].values[best] == attrs[cat];
      ++total;
    }
    CHECK(right >= 0.95 * total);
  }
}

TEST_CASE("spatial relations") {
  Scene s = table({{"a", 0, 0, "red", "cube", "plain"},
                   {"b", 1, 0, "red", "cube", "plain"},
                   {"c", 1.05, 3, "red", "cube", "plain"}});
  CHECK(spatial_holds(s, Relation::left, "a", "b"));
  CHECK(spatial_holds(s, Relation::right, "b", "a"));
  CHECK_FALSE(spatial_holds(s, Relation::left, "b", "c"));
  CHECK_FALSE(spatial_holds(s, Relation::right, "b", "c"));
  // y grows towards the viewer
  CHECK(spatial_holds(s, Relation::front, "c", "b"));
  CHECK(spatial_holds(s, Relation::behind, "b", "c"));
  for (auto rel : {Relation::left, Relation::front})
    for (const auto& [x, y] : relation_pairs(s, rel))
      CHECK(spatial_holds(s, rel == Relation::left ? Relation::right : Relation::behind, y, x));
}

TEST_CASE("ground truth model") {
  const Scene s = cubes_and_cylinder();
  const DomainModel m = ground_truth(s);
  CHECK(eval_formula(m, parse_formula("cube(o1) & red(o1) & neg(cube(o3))")));
  CHECK(eval_formula(m, parse_formula("left(o1,o3)")));
  CHECK(eval_formula(m, parse_formula("front(o2,o3)")));
}

TEST_CASE("plans") {
  const Scene s = cubes_and_cylinder();
  const DomainModel m = ground_truth(s);

  auto t = parse_instruction("move every cube to the left of the one cylinder");
  const auto done = plan_execution(m, t, s);
  REQUIRE(done.size() == 1);
  CHECK(done[0].kind == ActionKind::complete);

  t = parse_instruction("move every cube to the right of the one cylinder");
  const auto plan = plan_execution(m, t, s);
  CHECK(plan.size() == 5);
  CHECK(count(plan, ActionKind::pick) == 2);
  CHECK(plan.back().kind == ActionKind::complete);
  Scene run = s;
  for (const auto& a : plan) apply_action(run, a);
  CHECK(goal_satisfied(run, t));

  CHECK_THROWS_AS(plan_execution(m, parse_instruction("move the one yellow cube behind the one cylinder"), s), PlanningError);
  CHECK_THROWS_AS(plan_with({"o1"}, {"o1"}, parse_instruction("move a cube behind a cube"), s), PlanningError);
}

TEST_CASE("two apples into the basket") {
  SceneSpec spec;
  spec.schema = Schema::orchard();
  spec.required = {{"grannysmith", 2}};
  const Scene s = generate_scene(4, spec);
  const auto t = parse_instruction("put the two granny smiths inside the one basket");
  const auto plan = plan_execution(ground_truth(s), t, s);
  CHECK(count(plan, ActionKind::place) == 2);
  for (const auto& a : plan)
    if (a.kind == ActionKind::place) CHECK(s.is_container(a.landmarks.at(0)));
  Scene run = s;
  for (const auto& a : plan) apply_action(run, a);
  CHECK(goal_satisfied(run, t));
}

TEST_CASE("ground-truth plans reach generated goals") {
  SceneSpec spec;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Scene s = generate_scene(seed, spec);
    std::mt19937_64 rng(seed);
    const auto t = generate_task(s, rng);
    Scene run = s;
    for (const auto& a : plan_execution(ground_truth(s), t, s)) apply_action(run, a);
    CAPTURE(t.raw);
    CHECK(goal_satisfied(run, t));
  }
}

TEST_CASE("actions and undo") {
  Scene s = cubes_and_cylinder();
  const Scene original = s;
  Scene token = apply_action(s, {ActionKind::pick, "o1", {}, {}});
  CHECK(s.held == std::optional<ObjectId>("o1"));
  s = token;
  CHECK(s == original);

  apply_action(s, {ActionKind::pick, "o1", {}, {}});
  const Scene held = s;
  CHECK_THROWS_AS(apply_action(s, {ActionKind::place, "o1", {8, 5}, {}}), ExecutionError);
  CHECK(s == held);
  token = apply_action(s, {ActionKind::place, "o1", {9, 2}, {}});
  CHECK(spatial_holds(s, Relation::right, "o1", "o3"));
  s = token;
  CHECK(s == held);
  CHECK_THROWS_AS(apply_action(s, {ActionKind::complete, "", {}, {}}), ExecutionError);
}

TEST_CASE("oracle teacher") {
  const Scene s = cubes_and_cylinder();
  OracleTeacher oracle(5);
  const auto ans = oracle.answer(s, parse_refexp("every cube"));
  CHECK(ans.kind == OracleReply::Kind::answer);
  CHECK(ans.designation == std::vector<ObjectId>{"o1", "o2"});
  CHECK(oracle.answer(s, parse_refexp("the one yellow cube")).kind == OracleReply::Kind::reference_failure);

  const auto t = parse_instruction("move every cube in front of the one cylinder");
  auto r = oracle.respond(s, t, {ActionKind::pick, "o3", {}, {}});
  CHECK(r.kind == OracleReply::Kind::correction);
  CHECK(r.text == "No. This is a cylinder.");
  CHECK(r.corrected == "o3");
  CHECK(oracle.respond(s, t, {ActionKind::pick, "o1", {}, {}}).kind == OracleReply::Kind::ok);

  r = oracle.respond(s, t, {ActionKind::place, "o1", {3, 9}, {"o4"}});
  CHECK(r.kind == OracleReply::Kind::correction);
  CHECK(r.corrected == "o4");
  CHECK(r.text == "No. This is a rectangle.");

  r = oracle.respond(s, t, {ActionKind::complete, "", {}, {}});
  CHECK(r.kind == OracleReply::Kind::correction);
  CHECK(r.text == "No. This is a cube.");
  CHECK(r.corrected == "o1");
}

TEST_CASE("scene files") {
  const Scene s = generate_scene(9, {});
  CHECK(scene_from_json(scene_to_json(s)) == s);
  nlohmann::json j = scene_to_json(s);
  j["objects"][0].erase("embedding");
  const Scene t = scene_from_json(j);
  CHECK(t.objects[0].embedding.size() == s.schema.embedding_dim());
  j["objects"][0]["color"] = "plaid";
  CHECK_THROWS(scene_from_json(j));
}
