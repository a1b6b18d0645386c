// Interactive teaching session: a human plays the teacher.
//
// The session owns a scene, a belief that persists across tasks and the
// running Episode. Messages are JSON; see docs/protocol.md. A rejected
// message (protocol or validation error) leaves the session unchanged.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "secure/harness.hpp"

#include <json.hpp>

namespace secure {

inline constexpr const char* kSessionProtocol = "secure.session/1";

struct SessionConfig {
  PolicyKind policy = PolicyKind::secure;
  ExperimentConfig base;  // episode, belief, params and scene settings
  std::optional<Scene> scene;  // otherwise generated from base.seed
};

// Experiment keys plus "policy".
SessionConfig session_config_from_json(const nlohmann::json& j);

enum class Turn { awaiting_instruction, awaiting_answer, awaiting_feedback };

std::string turn_name(Turn t);

class Session {
 public:
  explicit Session(SessionConfig cfg);
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  Turn turn() const;
  nlohmann::json state() const;
  // Every finished task, then the running one.
  nlohmann::json transcript() const;
  // The running task, or null between tasks.
  const Episode* episode() const { return turn() == Turn::awaiting_instruction ? nullptr : episode_.get(); }

  void post_instruction(const std::string& text);
  // Object ids for the pending question; nullopt reports a reference failure.
  void post_answer(const std::optional<std::vector<ObjectId>>& objects);
  void post_correction(const std::string& text, const ObjectId& object);
  void post_proceed();
  // Replaces the scene between tasks. The belief keeps its vocabulary.
  void post_scene(const Scene& scene);

  struct Response {
    int status = 200;
    nlohmann::json body;
  };
  // Routes one message. Errors become JSON bodies with a status code:
  // 400 malformed, 404 unknown route, 409 out of turn, 422 invalid content.
  Response handle(const std::string& method, const std::string& path, const std::string& body);

 private:
  template <typename F>
  void transact(F&& f);
  void finish_task();

  SessionConfig cfg_;
  PolicySpec policy_;
  Scene scene_;
  BeliefState belief_;
  EpsilonGreedy decider_;
  std::unique_ptr<Episode> episode_;
  nlohmann::json finished_ = nlohmann::json::array();
  int tasks_ = 0;
};

}  // namespace secure
