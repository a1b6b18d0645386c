#include "secure/session.hpp"

#include <algorithm>
#include <set>

#include "secure/error.hpp"

namespace secure {

SessionConfig session_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("session configuration must be a JSON object");
  SessionConfig c;
  nlohmann::json rest = j;
  if (rest.contains("policy")) {
    c.policy = policy_from_name(rest["policy"].get<std::string>());
    rest.erase("policy");
  }
  if (rest.contains("scene")) {
    c.scene = scene_from_json(rest["scene"]);
    rest.erase("scene");
  }
  c.base = experiment_config_from_json(rest);
  return c;
}

std::string turn_name(Turn t) {
  switch (t) {
    case Turn::awaiting_instruction:
      return "awaiting_instruction";
    case Turn::awaiting_answer:
      return "awaiting_answer";
    case Turn::awaiting_feedback:
      return "awaiting_feedback";
  }
  return "awaiting_instruction";
}

namespace {

std::vector<std::string> expected_messages(Turn t) {
  switch (t) {
    case Turn::awaiting_instruction:
      return {"instruction", "scene"};
    case Turn::awaiting_answer:
      return {"answer"};
    case Turn::awaiting_feedback:
      return {"proceed", "correction"};
  }
  return {};
}

// Designation sizes the quantifier admits in a scene of n objects.
std::vector<std::size_t> admitted_sizes(const Quantifier& q, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t d = k; d <= n; ++d) {
      if (q.admits(k, d)) {
        out.push_back(k);
        break;
      }
    }
  }
  return out;
}

}  // namespace

Session::Session(SessionConfig cfg)
    : cfg_(std::move(cfg)),
      policy_(make_policy(cfg_.policy)),
      scene_(cfg_.scene ? *cfg_.scene : generate_scene(cfg_.base.seed, cfg_.base.scene)),
      belief_(make_belief({}, {})),
      decider_(cfg_.base.params, 0.0, cfg_.base.seed) {
  cfg_.base.validate();
}

Turn Session::turn() const {
  if (!episode_ || episode_->finished()) return Turn::awaiting_instruction;
  return episode_->pending() == Episode::Pending::question ? Turn::awaiting_answer : Turn::awaiting_feedback;
}

template <typename F>
void Session::transact(F&& f) {
  std::unique_ptr<Episode> episode_backup = episode_ ? std::make_unique<Episode>(*episode_) : nullptr;
  const EpsilonGreedy decider_backup = decider_;
  const Scene scene_backup = scene_;
  const BeliefState belief_backup = belief_;
  const auto finished_backup = finished_;
  const int tasks_backup = tasks_;
  try {
    f();
  } catch (...) {
    episode_ = std::move(episode_backup);
    decider_ = decider_backup;
    scene_ = scene_backup;
    belief_ = belief_backup;
    finished_ = finished_backup;
    tasks_ = tasks_backup;
    throw;
  }
}

void Session::finish_task() {
  if (!episode_ || !episode_->finished()) return;
  finished_.push_back({{"task", tasks_},
                       {"instruction", episode_->task().raw},
                       {"reward", episode_->reward()},
                       {"cost", episode_->cost()},
                       {"solved", episode_->solved()},
                       {"attempts", episode_->attempts()},
                       {"events", episode_->events()}});
  scene_ = episode_->scene();
  belief_ = episode_->take_belief();
  ++tasks_;
}

void Session::post_instruction(const std::string& text) {
  if (turn() != Turn::awaiting_instruction) throw ProtocolError("an instruction is not expected now", turn_name(turn()));
  TaskInstruction t;
  try {
    t = parse_instruction(text);
  } catch (const ParseError& e) {
    throw ValidationError(std::string("instruction does not parse: ") + e.what());
  }
  if (t.relation == Relation::above || t.relation == Relation::below)
    throw ValidationError("the table supports left, right, front, behind and inside only");
  transact([&] {
    episode_ = std::make_unique<Episode>(policy_, cfg_.base.episode, cfg_.base.belief, belief_, scene_, decider_);
    decider_.begin_episode();
    episode_->instruct(t);
    finish_task();
  });
}

void Session::post_answer(const std::optional<std::vector<ObjectId>>& objects) {
  if (turn() != Turn::awaiting_answer) throw ProtocolError("no question is pending", turn_name(turn()));
  if (objects) {
    std::set<ObjectId> seen;
    for (const auto& o : *objects) {
      if (!episode_->scene().contains(o)) throw ValidationError("unknown object '" + o + "'");
      if (!seen.insert(o).second) throw ValidationError("object '" + o + "' is designated twice");
    }
    const auto& q = episode_->question().refexp.quantifier;
    const auto sizes = admitted_sizes(q, episode_->scene().objects.size());
    if (std::find(sizes.begin(), sizes.end(), objects->size()) == sizes.end())
      throw ValidationError("\"" + episode_->question().surface + "\" cannot be answered with " +
                            std::to_string(objects->size()) + " object(s)");
  }
  transact([&] {
    episode_->answer(objects);
    finish_task();
  });
}

void Session::post_correction(const std::string& text, const ObjectId& object) {
  if (turn() != Turn::awaiting_feedback) throw ProtocolError("no executed action awaits feedback", turn_name(turn()));
  if (!episode_->scene().contains(object)) throw ValidationError("unknown object '" + object + "'");
  Correction c;
  try {
    c = parse_correction(text, {object});
  } catch (const ParseError& e) {
    throw ValidationError(std::string("correction does not parse: ") + e.what());
  }
  transact([&] {
    episode_->correct(c);
    finish_task();
  });
}

void Session::post_proceed() {
  if (turn() != Turn::awaiting_feedback) throw ProtocolError("no executed action awaits feedback", turn_name(turn()));
  transact([&] {
    episode_->accept();
    finish_task();
  });
}

void Session::post_scene(const Scene& scene) {
  if (turn() != Turn::awaiting_instruction) throw ProtocolError("the scene can only change between tasks", turn_name(turn()));
  if (scene.objects.empty()) throw ValidationError("a scene needs at least one object");
  scene_ = scene;
}

nlohmann::json Session::state() const {
  const Turn t = turn();
  const bool active = t != Turn::awaiting_instruction;
  const Scene& scene = active ? episode_->scene() : scene_;
  const BeliefState& belief = active ? episode_->belief() : belief_;

  nlohmann::json s;
  s["protocol"] = kSessionProtocol;
  s["turn"] = turn_name(t);
  s["expects"] = expected_messages(t);
  s["policy"] = policy_name(cfg_.policy);
  s["tasks_finished"] = tasks_;
  s["scene"] = scene_to_json(scene);
  s["belief"] = belief_snapshot(belief);
  s["utterance"] = nullptr;
  s["pending"] = nullptr;
  s["episode"] = nullptr;
  if (active) {
    const Episode& ep = *episode_;
    if (t == Turn::awaiting_answer) {
      const QuestionAction& q = ep.question();
      const auto sizes = admitted_sizes(q.refexp.quantifier, scene.objects.size());
      s["utterance"] = q.surface;
      s["pending"] = {{"kind", "question"},
                      {"text", q.surface},
                      {"logical_form", q.refexp.str()},
                      {"quantifier", q.refexp.quantifier.name()},
                      {"admitted_sizes", sizes}};
    } else {
      const ExecutionAction& a = ep.action();
      s["utterance"] = describe(a);
      nlohmann::json p{{"kind", "action"}, {"action", describe(a)}};
      if (!a.object.empty()) p["object"] = a.object;
      s["pending"] = p;
    }
    s["episode"] = {{"instruction", ep.task().raw},
                    {"reward", ep.reward()},
                    {"cost", ep.cost()},
                    {"attempts", ep.attempts()},
                    {"events", ep.events()}};
  }
  s["last_task"] = finished_.empty() ? nlohmann::json(nullptr) : finished_.back();
  return s;
}

nlohmann::json Session::transcript() const {
  nlohmann::json out = finished_;
  if (turn() != Turn::awaiting_instruction)
    out.push_back({{"task", tasks_}, {"instruction", episode_->task().raw}, {"events", episode_->events()}});
  return out;
}

namespace {

nlohmann::json error_body(const std::string& kind, const std::string& message) {
  return {{"protocol", kSessionProtocol}, {"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

Session::Response Session::handle(const std::string& method, const std::string& path, const std::string& body) {
  try {
    if (method == "GET") {
      if (path == "/state") return {200, state()};
      if (path == "/transcript") return {200, {{"protocol", kSessionProtocol}, {"tasks", transcript()}}};
      return {404, error_body("not_found", "no route " + method + " " + path)};
    }
    if (method != "POST") return {404, error_body("not_found", "no route " + method + " " + path)};

    nlohmann::json msg = body.empty() ? nlohmann::json::object() : nlohmann::json::parse(body);
    if (!msg.is_object()) return {400, error_body("malformed", "message must be a JSON object")};
    if (path == "/instruction") {
      post_instruction(msg.at("text").get<std::string>());
    } else if (path == "/answer") {
      if (msg.value("reference_failure", false))
        post_answer(std::nullopt);
      else
        post_answer(msg.at("objects").get<std::vector<ObjectId>>());
    } else if (path == "/correction") {
      post_correction(msg.at("text").get<std::string>(), msg.at("object").get<std::string>());
    } else if (path == "/proceed") {
      post_proceed();
    } else if (path == "/scene") {
      if (msg.contains("scene"))
        post_scene(scene_from_json(msg["scene"]));
      else
        post_scene(generate_scene(msg.at("seed").get<std::uint64_t>(), cfg_.base.scene));
    } else {
      return {404, error_body("not_found", "no route " + method + " " + path)};
    }
    return {200, state()};
  } catch (const ProtocolError& e) {
    auto b = error_body("protocol", e.what());
    b["error"]["turn"] = turn_name(turn());
    b["error"]["expects"] = expected_messages(turn());
    return {409, b};
  } catch (const ValidationError& e) {
    return {422, error_body("validation", e.what())};
  } catch (const nlohmann::json::exception& e) {
    return {400, error_body("malformed", e.what())};
  } catch (const ConfigError& e) {
    return {422, error_body("validation", e.what())};
  } catch (const Error& e) {
    return {500, error_body("engine", e.what())};
  }
}

}  // namespace secure
