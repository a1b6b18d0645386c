#include <doctest.h>

#include "secure/error.hpp"
#include "secure/session.hpp"

using namespace secure;

namespace {

SessionConfig config_for(const Scene& scene) {
  SessionConfig c;
  c.scene = scene;
  return c;
}

Scene four_blocks() {
  Scene s;
  s.schema = Schema::blocksworld();
  std::mt19937_64 rng(1);
  const std::vector<std::tuple<std::string, double, double, std::string, std::string>> objs = {
      {"o1", 2, 2, "red", "cube"}, {"o2", 5, 8, "blue", "cube"}, {"o3", 8, 5, "green", "cylinder"},
      {"o4", 1, 9, "grey", "rectangle"}};
  for (const auto& [id, x, y, c, sh] : objs) {
    SceneObject o{id, {x, y}, {c, sh, "plain"}, {}};
    o.embedding = synth_embedding(s.schema, o.attributes, 0.05, rng);
    s.objects.push_back(o);
  }
  return s;
}

// Drives the session to the end of the current task with the oracle.
void play(Session& s, const TaskInstruction& t, OracleTeacher& oracle) {
  for (int guard = 0; s.episode() && guard < 1000; ++guard) {
    const Episode& ep = *s.episode();
    if (ep.pending() == Episode::Pending::question) {
      const auto reply = oracle.answer(ep.scene(), ep.question().refexp);
      if (reply.kind == OracleReply::Kind::answer)
        s.post_answer(reply.designation);
      else
        s.post_answer(std::nullopt);
    } else {
      const auto reply = oracle.respond(ep.scene(), t, ep.action());
      if (reply.kind == OracleReply::Kind::correction)
        s.post_correction(reply.text, reply.corrected);
      else
        s.post_proceed();
    }
  }
}

}  // namespace

TEST_CASE("turns and routes") {
  Session s(config_for(four_blocks()));
  CHECK(s.turn() == Turn::awaiting_instruction);
  auto r = s.handle("GET", "/state", "");
  CHECK(r.status == 200);
  CHECK(r.body["protocol"] == "secure.session/1");
  CHECK(r.body["expects"] == nlohmann::json{"instruction", "scene"});

  CHECK(s.handle("GET", "/nowhere", "").status == 404);
  CHECK(s.handle("DELETE", "/state", "").status == 404);
  CHECK(s.handle("POST", "/instruction", "{not json").status == 400);
  CHECK(s.handle("POST", "/instruction", "[1]").status == 400);
  CHECK(s.handle("POST", "/instruction", "{}").status == 400);

  r = s.handle("POST", "/answer", R"({"objects": ["o1"]})");
  CHECK(r.status == 409);
  CHECK(r.body["error"]["turn"] == "awaiting_instruction");

  CHECK(s.handle("POST", "/instruction", R"({"text": "move a cube above a cylinder"})").status == 422);
  CHECK(s.handle("POST", "/instruction", R"({"text": "make it nice"})").status == 422);
  CHECK(s.turn() == Turn::awaiting_instruction);
}

TEST_CASE("rejected messages leave the session unchanged") {
  Session s(config_for(four_blocks()));
  s.post_instruction("move every cube to the right of the one cylinder");
  // drive until a question is pending, if the agent asks at all
  OracleTeacher oracle(3);
  const TaskInstruction t = parse_instruction("move every cube to the right of the one cylinder");
  for (int guard = 0; s.episode() && s.turn() != Turn::awaiting_answer && guard < 50; ++guard) {
    const auto reply = oracle.respond(s.episode()->scene(), t, s.episode()->action());
    if (reply.kind == OracleReply::Kind::correction)
      s.post_correction(reply.text, reply.corrected);
    else
      s.post_proceed();
  }
  REQUIRE(s.turn() == Turn::awaiting_answer);

  const auto state = s.state();
  const auto transcript = s.transcript();
  const auto sizes = state["pending"]["admitted_sizes"];
  CHECK(s.handle("POST", "/proceed", "{}").status == 409);
  CHECK(s.handle("POST", "/instruction", R"({"text": "move a cube behind a cube"})").status == 409);
  CHECK(s.handle("POST", "/answer", R"({"objects": ["o9"]})").status == 422);
  CHECK(s.handle("POST", "/answer", R"({"objects": ["o1", "o1"]})").status == 422);
  // a size no quantifier reading admits
  nlohmann::json all = nlohmann::json::array();
  for (const auto& o : four_blocks().objects) all.push_back(o.id);
  if (std::find(sizes.begin(), sizes.end(), 4) == sizes.end())
    CHECK(s.handle("POST", "/answer", nlohmann::json{{"objects", all}}.dump()).status == 422);
  if (std::find(sizes.begin(), sizes.end(), 0) == sizes.end())
    CHECK(s.handle("POST", "/answer", R"({"objects": []})").status == 422);
  CHECK(s.state() == state);
  CHECK(s.transcript() == transcript);

  // the follow-up question admits exactly one object
  s.post_answer(oracle.answer(s.episode()->scene(), s.episode()->question().refexp).designation);
  REQUIRE(s.turn() == Turn::awaiting_answer);
  CHECK(s.state()["pending"]["admitted_sizes"] == nlohmann::json{1});
  const auto before = s.state();
  const auto r = s.handle("POST", "/answer", R"({"objects": ["o1", "o3"]})");
  CHECK(r.status == 422);
  CHECK(r.body["error"]["kind"] == "validation");
  CHECK(s.state() == before);
}

TEST_CASE("scene changes only between tasks") {
  Session s(config_for(four_blocks()));
  CHECK(s.handle("POST", "/scene", R"({"seed": 5})").status == 200);
  CHECK(s.state()["scene"]["seed"] == 5);
  s.post_instruction(render_instruction(generate_task(generate_scene(5, {}), *std::make_unique<std::mt19937_64>(1))));
  if (s.turn() != Turn::awaiting_instruction) CHECK(s.handle("POST", "/scene", R"({"seed": 6})").status == 409);
}

TEST_CASE("oracle replay through the session matches the oracle loop") {
  const auto stream = task_stream(1, 0, 3, {});
  ExperimentConfig base;

  BeliefState belief = make_belief({}, {});
  EpsilonGreedy decider(base.params, 0.0, base.seed);
  double reward = 0.0;
  for (const auto& spec : stream) {
    OracleTeacher oracle(spec.oracle_seed);
    reward += run_episode(make_policy(PolicyKind::secure), base.episode, base.belief, belief, spec.scene, spec.task,
                          decider, oracle)
                  .reward;
  }

  SessionConfig cfg;
  cfg.base = base;
  cfg.scene = stream[0].scene;
  Session s(cfg);
  double session_reward = 0.0;
  for (const auto& spec : stream) {
    s.post_scene(spec.scene);
    OracleTeacher oracle(spec.oracle_seed);
    s.post_instruction(spec.task.raw);
    play(s, spec.task, oracle);
    REQUIRE(s.turn() == Turn::awaiting_instruction);
    session_reward += s.state()["last_task"]["reward"].get<double>();
  }
  CHECK(session_reward == reward);
  CHECK(s.state()["belief"].dump() == belief_snapshot(belief).dump());
  CHECK(s.transcript().size() == stream.size());
}
