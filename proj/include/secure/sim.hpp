// Kinematic tabletop: scenes on a bounded grid, ground-truth models,
// synthetic embeddings, plans and an oracle teacher.
//
// Axis convention: x grows to the right, y grows towards the viewer, so
// front(a, b) means a is nearer the camera than b.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "secure/discourse.hpp"
#include "secure/logic.hpp"
#include "secure/parser.hpp"

#include <json.hpp>

namespace secure {

struct Category {
  std::string name;
  std::vector<std::string> values;

  friend bool operator==(const Category&, const Category&) = default;
};

// Attribute categories of a scene. The noun category names objects.
struct Schema {
  std::string name;
  std::vector<Category> categories;
  std::size_t noun = 0;
  std::vector<std::string> containers;  // noun values that hold other objects

  static Schema blocksworld();
  static Schema orchard();

  std::vector<Symbol> unary_symbols() const;
  // Category index of an attribute value.
  std::optional<std::size_t> category_of(std::string_view value) const;
  // One-hot block width per category.
  std::vector<std::size_t> block_widths() const;
  std::size_t embedding_dim() const;

  friend bool operator==(const Schema&, const Schema&) = default;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct SceneObject {
  ObjectId id;
  Pose position;
  std::vector<std::string> attributes;  // one value per schema category
  std::vector<double> embedding;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct SceneSpec {
  Schema schema = Schema::blocksworld();
  std::size_t min_objects = 6;
  std::size_t max_objects = 7;
  double width = 10.0;
  double height = 10.0;
  double epsilon = 0.1;       // spatial tie margin
  double noise_sigma = 0.1;   // embedding noise
  // For the orchard schema: how many objects carry the target value.
  std::optional<std::pair<std::string, std::size_t>> required;
};

struct Scene {
  Schema schema;
  double width = 10.0;
  double height = 10.0;
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  std::vector<SceneObject> objects;
  std::optional<ObjectId> held;

  std::vector<ObjectId> ids() const;
  const SceneObject& object(const ObjectId& id) const;
  std::size_t index_of(const ObjectId& id) const;
  bool contains(const ObjectId& id) const;
  bool is_container(const ObjectId& id) const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

constexpr std::array<Relation, 5> kSceneRelations{Relation::left, Relation::right, Relation::front,
                                                  Relation::behind, Relation::inside};

Scene generate_scene(std::uint64_t seed, const SceneSpec& spec);

std::vector<double> synth_embedding(const Schema& schema, const std::vector<std::string>& attributes,
                                    double noise_sigma, std::mt19937_64& rng);

bool spatial_holds(const Scene& scene, Relation rel, const ObjectId& a, const ObjectId& b);
std::vector<std::pair<ObjectId, ObjectId>> relation_pairs(const Scene& scene, Relation rel);

// Attributes plus spatial relations at the current positions.
DomainModel ground_truth(const Scene& scene);

// Q_d x.(r_d, Q_i y.(r_i, rel(x, y))).
Formula goal_formula(const TaskInstruction& t);
bool goal_satisfied(const Scene& scene, const TaskInstruction& t);

struct ExecutionAction {
  ActionKind kind = ActionKind::complete;
  ObjectId object;                 // pick, place
  Pose target;                     // place
  std::vector<ObjectId> landmarks; // place: objects the target was chosen against
};

std::string describe(const ExecutionAction& a);

// Pick/place pairs for every chosen direct object not yet related to the
// chosen landmarks, then complete. Throws PlanningError on reference failure
// or when no free pose satisfies the relation.
std::vector<ExecutionAction> plan_execution(const DomainModel& model, const TaskInstruction& t,
                                            const Scene& scene);
// Same with explicit referent choices.
std::vector<ExecutionAction> plan_with(const std::vector<ObjectId>& direct,
                                       const std::vector<ObjectId>& landmarks, const TaskInstruction& t,
                                       const Scene& scene);

// Applies an action, returning the previous scene as the undo token. Throws
// ExecutionError without touching the scene when infeasible.
Scene apply_action(Scene& scene, const ExecutionAction& a);

// Task instructions over a scene whose referents exist and whose
// ground-truth plan reaches the goal.
TaskInstruction generate_task(const Scene& scene, std::mt19937_64& rng);

struct OracleReply {
  enum class Kind { ok, answer, correction, reference_failure };
  Kind kind = Kind::ok;
  std::vector<ObjectId> designation;  // answer
  std::string text;                   // correction text
  ObjectId corrected;                 // correction designation
};

class OracleTeacher {
 public:
  OracleTeacher(std::uint64_t seed) : rng_(seed) {}

  OracleReply answer(const Scene& scene, const RefForm& question);
  // Feedback on an executed action. For place, the scene is the one after
  // the action.
  OracleReply respond(const Scene& scene, const TaskInstruction& t, const ExecutionAction& a);

 private:
  std::mt19937_64 rng_;
};

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

}  // namespace secure
