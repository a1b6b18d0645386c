#include "secure/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "secure/error.hpp"

namespace secure {

Schema Schema::blocksworld() {
  Schema s;
  s.name = "blocksworld";
  s.categories = {
      {"color", {"red", "green", "blue", "cyan", "grey", "magenta", "yellow"}},
      {"shape", {"cube", "rectangle", "cylinder"}},
      {"texture", {"plain", "dotted", "star"}},
  };
  s.noun = 1;
  return s;
}

Schema Schema::orchard() {
  Schema s;
  s.name = "orchard";
  s.categories = {{"kind", {"grannysmith", "goldendelicious", "reddelicious", "pinklady", "basket"}}};
  s.noun = 0;
  s.containers = {"basket"};
  return s;
}

std::vector<Symbol> Schema::unary_symbols() const {
  std::vector<Symbol> out;
  for (const auto& c : categories)
    for (const auto& v : c.values) out.push_back({v, 1});
  return out;
}

std::optional<std::size_t> Schema::category_of(std::string_view value) const {
  for (std::size_t c = 0; c < categories.size(); ++c)
    for (const auto& v : categories[c].values)
      if (v == value) return c;
  return std::nullopt;
}

std::vector<std::size_t> Schema::block_widths() const {
  std::vector<std::size_t> out;
  for (const auto& c : categories) {
    std::size_t w = 1;
    while (w < c.values.size() + 1) w *= 2;
    out.push_back(w);
  }
  return out;
}

std::size_t Schema::embedding_dim() const {
  const auto w = block_widths();
  return std::accumulate(w.begin(), w.end(), std::size_t{0});
}

std::vector<ObjectId> Scene::ids() const {
  std::vector<ObjectId> out;
  for (const auto& o : objects) out.push_back(o.id);
  return out;
}

std::size_t Scene::index_of(const ObjectId& id) const {
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (objects[i].id == id) return i;
  throw ExecutionError("unknown object '" + id + "'");
}

bool Scene::contains(const ObjectId& id) const {
  return std::any_of(objects.begin(), objects.end(), [&](const SceneObject& o) { return o.id == id; });
}

const SceneObject& Scene::object(const ObjectId& id) const { return objects[index_of(id)]; }

bool Scene::is_container(const ObjectId& id) const {
  const auto& noun_value = object(id).attributes.at(schema.noun);
  return std::find(schema.containers.begin(), schema.containers.end(), noun_value) != schema.containers.end();
}

std::vector<double> synth_embedding(const Schema& schema, const std::vector<std::string>& attributes,
                                    double noise_sigma, std::mt19937_64& rng) {
  if (attributes.size() != schema.categories.size()) throw Error("one attribute per category is required");
  const auto widths = schema.block_widths();
  std::vector<double> x(schema.embedding_dim(), 0.0);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < widths.size(); ++c) {
    const auto& values = schema.categories[c].values;
    const auto it = std::find(values.begin(), values.end(), attributes[c]);
    if (it == values.end()) throw Error("'" + attributes[c] + "' is not a " + schema.categories[c].name);
    x[offset + static_cast<std::size_t>(it - values.begin())] = 1.0;
    offset += widths[c];
  }
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : x) v += noise(rng);
  }
  return x;
}

Scene generate_scene(std::uint64_t seed, const SceneSpec& spec) {
  if (spec.min_objects == 0 || spec.min_objects > spec.max_objects) throw ConfigError("invalid object count range");
  const auto columns = static_cast<std::size_t>(std::floor(spec.width));
  const auto rows = static_cast<std::size_t>(std::floor(spec.height));
  if (spec.max_objects > columns || spec.max_objects > rows)
    throw ConfigError("too many objects for a " + std::to_string(columns) + "x" + std::to_string(rows) + " grid");
  if (!(spec.epsilon >= 0.0 && spec.epsilon < 1.0)) throw ConfigError("spatial margin must lie in [0, 1)");

  std::mt19937_64 rng(seed);
  Scene scene;
  scene.schema = spec.schema;
  scene.width = spec.width;
  scene.height = spec.height;
  scene.epsilon = spec.epsilon;
  scene.seed = seed;

  std::uniform_int_distribution<std::size_t> count_dist(spec.min_objects, spec.max_objects);
  const std::size_t n = count_dist(rng);

  std::vector<std::size_t> xs(columns), ys(rows);
  std::iota(xs.begin(), xs.end(), 0);
  std::iota(ys.begin(), ys.end(), 0);
  std::shuffle(xs.begin(), xs.end(), rng);
  std::shuffle(ys.begin(), ys.end(), rng);

  const Schema& schema = spec.schema;
  std::vector<std::vector<std::string>> attributes(n, std::vector<std::string>(schema.categories.size()));
  for (std::size_t c = 0; c < schema.categories.size(); ++c) {
    std::vector<std::string> pool;
    for (const auto& v : schema.categories[c].values)
      if (c != schema.noun || std::find(schema.containers.begin(), schema.containers.end(), v) == schema.containers.end())
        pool.push_back(v);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (auto& a : attributes) a[c] = pool[pick(rng)];
  }

  std::size_t fixed = 0;
  if (!schema.containers.empty()) {
    if (n < 2) throw ConfigError("a scene with a container needs at least two objects");
    attributes[fixed++][schema.noun] = schema.containers.front();
  }
  if (spec.required) {
    const auto& [value, k] = *spec.required;
    const auto c = schema.category_of(value);
    if (!c) throw ConfigError("unknown attribute value '" + value + "'");
    if (fixed + k > n) throw ConfigError("required objects exceed the scene size");
    for (std::size_t i = fixed; i < fixed + k; ++i) attributes[i][*c] = value;
    for (std::size_t i = fixed + k; i < n; ++i) {
      if (attributes[i][*c] != value) continue;
      std::vector<std::string> others;
      for (const auto& v : schema.categories[*c].values)
        if (v != value && (*c != schema.noun ||
                           std::find(schema.containers.begin(), schema.containers.end(), v) == schema.containers.end()))
          others.push_back(v);
      if (others.empty()) throw ConfigError("no alternative to '" + value + "'");
      std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
      attributes[i][*c] = others[pick(rng)];
    }
  }
  std::shuffle(attributes.begin(), attributes.end(), rng);

  for (std::size_t i = 0; i < n; ++i) {
    SceneObject o;
    o.id = "o" + std::to_string(i + 1);
    o.position = {static_cast<double>(xs[i]), static_cast<double>(ys[i])};
    o.attributes = attributes[i];
    o.embedding = synth_embedding(schema, o.attributes, spec.noise_sigma, rng);
    scene.objects.push_back(std::move(o));
  }
  return scene;
}

namespace {

constexpr double kContainerHalfWidth = 1.0;
constexpr double kPoseStep = 0.5;

bool holds_at(const Scene& scene, Relation rel, const Pose& a, const Pose& b, bool b_is_container) {
  const double e = scene.epsilon;
  switch (rel) {
    case Relation::left:
      return a.x < b.x - e;
    case Relation::right:
      return a.x > b.x + e;
    case Relation::front:
      return a.y > b.y + e;
    case Relation::behind:
      return a.y < b.y - e;
    case Relation::inside:
      return b_is_container && std::abs(a.x - b.x) <= kContainerHalfWidth &&
             std::abs(a.y - b.y) <= kContainerHalfWidth;
    case Relation::above:
    case Relation::below:
      return false;
  }
  return false;
}

bool collides(const Pose& a, const Pose& b) { return std::abs(a.x - b.x) < kPoseStep && std::abs(a.y - b.y) < kPoseStep; }

bool pose_free(const Scene& scene, const ObjectId& mover, const Pose& p) {
  if (p.x < 0.0 || p.y < 0.0 || p.x > scene.width - 1.0 || p.y > scene.height - 1.0) return false;
  for (const auto& o : scene.objects) {
    if (o.id == mover || scene.is_container(o.id)) continue;
    if (collides(o.position, p)) return false;
  }
  return true;
}

}  // namespace

bool spatial_holds(const Scene& scene, Relation rel, const ObjectId& a, const ObjectId& b) {
  if (a == b) return false;
  if (rel == Relation::inside && scene.is_container(a)) return false;
  return holds_at(scene, rel, scene.object(a).position, scene.object(b).position, scene.is_container(b));
}

std::vector<std::pair<ObjectId, ObjectId>> relation_pairs(const Scene& scene, Relation rel) {
  std::vector<std::pair<ObjectId, ObjectId>> out;
  for (const auto& a : scene.objects)
    for (const auto& b : scene.objects)
      if (spatial_holds(scene, rel, a.id, b.id)) out.emplace_back(a.id, b.id);
  return out;
}

DomainModel ground_truth(const Scene& scene) {
  std::vector<Symbol> vocabulary = scene.schema.unary_symbols();
  for (Relation r : kSceneRelations) vocabulary.push_back({relation_symbol(r), 2});
  DomainModel m(scene.ids(), vocabulary);
  for (const auto& o : scene.objects)
    for (const auto& v : o.attributes) m.add(v, {o.id});
  for (Relation r : kSceneRelations)
    for (const auto& [a, b] : relation_pairs(scene, r)) m.add(relation_symbol(r), {a, b});
  return m;
}

Formula goal_formula(const TaskInstruction& t) {
  std::set<std::string> used{t.direct.variable};
  auto collect = [&](const Formula& f, auto& self) -> void {
    if (f.kind() == Formula::Kind::quantified) {
      used.insert(f.variable());
      self(f.restrictor(), self);
      self(f.body(), self);
    } else if (f.kind() == Formula::Kind::negation) {
      self(f.operand(), self);
    } else if (f.is_binary()) {
      self(f.lhs(), self);
      self(f.rhs(), self);
    }
  };
  collect(t.direct.restrictor, collect);
  collect(t.indirect.restrictor, collect);
  std::string y = "y";
  for (int i = 1; used.contains(y); ++i) y = "y" + std::to_string(i);
  const Formula body = Formula::quantified(t.indirect.quantifier, y, t.indirect.restrictor.rename(t.indirect.variable, y),
                                           Formula::atom(relation_symbol(t.relation), {Term::variable(t.direct.variable), Term::variable(y)}));
  return Formula::quantified(t.direct.quantifier, t.direct.variable, t.direct.restrictor, body);
}

bool goal_satisfied(const Scene& scene, const TaskInstruction& t) {
  return eval_formula(ground_truth(scene), goal_formula(t));
}

std::string describe(const ExecutionAction& a) {
  switch (a.kind) {
    case ActionKind::pick:
      return "pick(" + a.object + ")";
    case ActionKind::place: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "place(%s, %.1f, %.1f)", a.object.c_str(), a.target.x, a.target.y);
      return buf;
    }
    case ActionKind::complete:
      return "complete";
  }
  return "complete";
}

namespace {

std::optional<Pose> find_pose(const Scene& scene, const ObjectId& mover, Relation rel,
                              const std::vector<ObjectId>& landmarks) {
  double cx = 0.0, cy = 0.0;
  for (const auto& l : landmarks) {
    cx += scene.object(l).position.x;
    cy += scene.object(l).position.y;
  }
  cx /= static_cast<double>(landmarks.size());
  cy /= static_cast<double>(landmarks.size());

  std::optional<Pose> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (double y = 0.0; y <= scene.height - 1.0 + 1e-9; y += kPoseStep) {
    for (double x = 0.0; x <= scene.width - 1.0 + 1e-9; x += kPoseStep) {
      const Pose p{x, y};
      bool ok = true;
      for (const auto& l : landmarks) {
        if (l == mover || !holds_at(scene, rel, p, scene.object(l).position, scene.is_container(l))) {
          ok = false;
          break;
        }
      }
      if (!ok || !pose_free(scene, mover, p)) continue;
      const double d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
  }
  return best;
}

}  // namespace

std::vector<ExecutionAction> plan_with(const std::vector<ObjectId>& direct, const std::vector<ObjectId>& landmarks,
                                       const TaskInstruction& t, const Scene& scene) {
  std::vector<ExecutionAction> plan;
  Scene working = scene;
  working.held.reset();
  if (landmarks.empty()) throw PlanningError("no landmark to place against");
  for (const auto& o : direct) {
    // Relations are irreflexive: an object is never its own landmark.
    if (std::find(landmarks.begin(), landmarks.end(), o) != landmarks.end())
      throw PlanningError(o + " is both moved and a landmark");
    const bool satisfied = std::all_of(landmarks.begin(), landmarks.end(), [&](const ObjectId& l) {
      return spatial_holds(working, t.relation, o, l);
    });
    if (satisfied) continue;
    const auto pose = find_pose(working, o, t.relation, landmarks);
    if (!pose)
      throw PlanningError("no free pose puts " + o + " " + relation_phrase(t.relation) + " the chosen landmarks");
    plan.push_back({ActionKind::pick, o, {}, {}});
    plan.push_back({ActionKind::place, o, *pose, landmarks});
    working.objects[working.index_of(o)].position = *pose;
  }
  plan.push_back({ActionKind::complete, {}, {}, {}});
  return plan;
}

std::vector<ExecutionAction> plan_execution(const DomainModel& model, const TaskInstruction& t, const Scene& scene) {
  const Referent direct = referent_of(model, t.direct);
  if (direct.empty()) throw PlanningError("reference failure: " + render_refexp(t.direct));
  const Referent indirect = referent_of(model, t.indirect);
  if (indirect.empty()) throw PlanningError("reference failure: " + render_refexp(t.indirect));
  std::optional<PlanningError> first;
  for (const auto& d : direct) {
    for (const auto& l : indirect) {
      try {
        return plan_with(d, l, t, scene);
      } catch (const PlanningError& e) {
        if (!first) first = e;
      }
    }
  }
  throw *first;
}

Scene apply_action(Scene& scene, const ExecutionAction& a) {
  Scene before = scene;
  switch (a.kind) {
    case ActionKind::pick:
      scene.index_of(a.object);
      if (scene.held) throw ExecutionError("already holding " + *scene.held);
      scene.held = a.object;
      break;
    case ActionKind::place: {
      if (!scene.held || *scene.held != a.object) throw ExecutionError("place of " + a.object + " without a pick");
      if (!pose_free(scene, a.object, a.target)) throw ExecutionError("target pose is occupied or off the table");
      scene.objects[scene.index_of(a.object)].position = a.target;
      scene.held.reset();
      break;
    }
    case ActionKind::complete:
      if (scene.held) throw ExecutionError("complete while holding " + *scene.held);
      break;
  }
  return before;
}

namespace {

struct Description {
  Formula restrictor;
  std::vector<std::string> words;
};

// Restrictor for object o: its noun plus up to two modifiers.
Description describe_object(const Scene& scene, const SceneObject& o, std::mt19937_64& rng) {
  const Schema& s = scene.schema;
  std::vector<std::size_t> modifiers;
  for (std::size_t c = 0; c < s.categories.size(); ++c)
    if (c != s.noun) modifiers.push_back(c);
  std::shuffle(modifiers.begin(), modifiers.end(), rng);
  std::uniform_int_distribution<std::size_t> how_many(0, std::min<std::size_t>(modifiers.size(), 2));
  modifiers.resize(how_many(rng));
  std::sort(modifiers.begin(), modifiers.end());
  Description d;
  std::vector<Formula> parts;
  for (auto c : modifiers) d.words.push_back(o.attributes[c]);
  d.words.push_back(o.attributes[s.noun]);
  for (const auto& w : d.words) parts.push_back(Formula::atom(w, "x"));
  d.restrictor = Formula::conj(parts);
  return d;
}

std::vector<ObjectId> matching(const Scene& scene, const std::vector<std::string>& words) {
  std::vector<ObjectId> out;
  for (const auto& o : scene.objects) {
    bool all = true;
    for (const auto& w : words)
      if (std::find(o.attributes.begin(), o.attributes.end(), w) == o.attributes.end()) all = false;
    if (all) out.push_back(o.id);
  }
  return out;
}

Quantifier pick_quantifier(std::size_t count, bool allow_every, std::mt19937_64& rng) {
  std::vector<Quantifier> options{Quantifier::existential(), Quantifier::the(static_cast<int>(count))};
  if (count == 2) options.push_back(Quantifier::both());
  if (allow_every) options.push_back(Quantifier::universal());
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  return options[pick(rng)];
}

}  // namespace

TaskInstruction generate_task(const Scene& scene, std::mt19937_64& rng) {
  const DomainModel truth = ground_truth(scene);
  std::vector<Relation> relations;
  const bool has_container =
      std::any_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) { return scene.is_container(o.id); });
  if (has_container)
    relations = {Relation::inside};
  else
    relations = {Relation::left, Relation::right, Relation::front, Relation::behind};

  std::uniform_int_distribution<std::size_t> pick_object(0, scene.objects.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_relation(0, relations.size() - 1);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const SceneObject& seed_obj = scene.objects[pick_object(rng)];
    if (scene.is_container(seed_obj.id)) continue;
    const Description dd = describe_object(scene, seed_obj, rng);
    const auto direct_set = matching(scene, dd.words);
    if (direct_set.size() > 3) continue;

    const Relation rel = relations[pick_relation(rng)];
    const SceneObject* landmark = nullptr;
    if (rel == Relation::inside) {
      for (const auto& o : scene.objects)
        if (scene.is_container(o.id)) landmark = &o;
    } else {
      landmark = &scene.objects[pick_object(rng)];
      if (scene.is_container(landmark->id)) continue;
    }
    const Description di = describe_object(scene, *landmark, rng);
    const auto indirect_set = matching(scene, di.words);
    const bool overlap = std::any_of(direct_set.begin(), direct_set.end(), [&](const ObjectId& o) {
      return std::find(indirect_set.begin(), indirect_set.end(), o) != indirect_set.end();
    });
    if (overlap || indirect_set.size() > 2) continue;

    TaskInstruction t;
    t.direct = {pick_quantifier(direct_set.size(), true, rng), "x", dd.restrictor};
    t.relation = rel;
    t.indirect = {pick_quantifier(indirect_set.size(), true, rng), "x", di.restrictor};
    t.raw = render_instruction(t);
    try {
      t = parse_instruction(t.raw);
    } catch (const ParseError&) {
      continue;
    }
    if (goal_satisfied(scene, t)) continue;

    Scene sim = scene;
    try {
      for (const auto& a : plan_execution(truth, t, sim)) apply_action(sim, a);
    } catch (const PlanningError&) {
      continue;
    } catch (const ExecutionError&) {
      continue;
    }
    if (goal_satisfied(sim, t)) return t;
  }
  throw PlanningError("no feasible task for scene " + std::to_string(scene.seed));
}

namespace {

std::vector<Formula> unary_conjuncts(const RefForm& r) {
  std::vector<Formula> out;
  for (const auto& c : r.restrictor.conjuncts())
    if (c.kind() == Formula::Kind::atom && c.terms().size() == 1) out.push_back(c);
  return out;
}

// "No. This is a <value>." naming the category of the violated conjunct;
// the head noun's category wins when several are violated.
std::string naming(const Scene& scene, const DomainModel& truth, const RefForm& r, const ObjectId& o,
                   RefForm* stated) {
  const auto atoms = unary_conjuncts(r);
  const std::size_t oi = *truth.index_of(o);
  std::optional<std::size_t> category;
  if (!atoms.empty()) {
    const auto head = scene.schema.category_of(atoms.back().predicate());
    const bool head_violated = !truth.holds(atoms.back().predicate(), {oi});
    if (head_violated) category = head;
    for (std::size_t i = 0; !category && i < atoms.size(); ++i)
      if (!truth.holds(atoms[i].predicate(), {oi})) category = scene.schema.category_of(atoms[i].predicate());
    if (!category) category = head;
  }
  if (!category) category = scene.schema.noun;
  const std::string value = scene.object(o).attributes[*category];
  *stated = {Quantifier::existential(), "x", Formula::atom(value, "x")};
  return render_correction(*stated);
}

}  // namespace

OracleReply OracleTeacher::answer(const Scene& scene, const RefForm& question) {
  const Referent referent = referent_of(ground_truth(scene), question);
  OracleReply reply;
  if (referent.empty()) {
    reply.kind = OracleReply::Kind::reference_failure;
    return reply;
  }
  std::uniform_int_distribution<std::size_t> pick(0, referent.size() - 1);
  reply.kind = OracleReply::Kind::answer;
  reply.designation = referent[referent.size() == 1 ? 0 : pick(rng_)];
  return reply;
}

OracleReply OracleTeacher::respond(const Scene& scene, const TaskInstruction& t, const ExecutionAction& a) {
  const DomainModel truth = ground_truth(scene);
  OracleReply reply;
  RefForm stated;
  switch (a.kind) {
    case ActionKind::pick: {
      if (eval_formula(truth, t.direct.restrictor.substitute(t.direct.variable, a.object))) return reply;
      reply.kind = OracleReply::Kind::correction;
      reply.corrected = a.object;
      reply.text = naming(scene, truth, t.direct, a.object, &stated);
      return reply;
    }
    case ActionKind::place: {
      for (const auto& l : a.landmarks) {
        if (eval_formula(truth, t.indirect.restrictor.substitute(t.indirect.variable, l))) continue;
        reply.kind = OracleReply::Kind::correction;
        reply.corrected = l;
        reply.text = naming(scene, truth, t.indirect, l, &stated);
        return reply;
      }
      return reply;
    }
    case ActionKind::complete: {
      const Formula goal = goal_formula(t);
      if (eval_formula(truth, goal)) return reply;
      const Formula& body = goal.body();
      std::optional<ObjectId> renegade, fallback;
      for (const auto& o : scene.objects) {
        if (!eval_formula(truth, t.direct.restrictor.substitute(t.direct.variable, o.id))) continue;
        if (!fallback) fallback = o.id;
        if (!eval_formula(truth, body.substitute(t.direct.variable, o.id))) {
          renegade = o.id;
          break;
        }
      }
      if (!renegade) renegade = fallback;
      if (!renegade) throw PlanningError("the instruction has no referent in the scene");
      reply.kind = OracleReply::Kind::correction;
      reply.corrected = *renegade;
      reply.text = render_correction(t.direct);
      return reply;
    }
  }
  return reply;
}

nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json j;
  j["schema"] = scene.schema.name;
  j["width"] = scene.width;
  j["height"] = scene.height;
  j["epsilon"] = scene.epsilon;
  j["seed"] = scene.seed;
  j["held"] = scene.held ? nlohmann::json(*scene.held) : nlohmann::json(nullptr);
  j["objects"] = nlohmann::json::array();
  for (const auto& o : scene.objects) {
    nlohmann::json jo;
    jo["id"] = o.id;
    jo["position"] = {o.position.x, o.position.y};
    for (std::size_t c = 0; c < scene.schema.categories.size(); ++c) jo[scene.schema.categories[c].name] = o.attributes[c];
    jo["embedding"] = o.embedding;
    j["objects"].push_back(std::move(jo));
  }
  return j;
}

Scene scene_from_json(const nlohmann::json& j) {
  Scene scene;
  const std::string schema = j.value("schema", "blocksworld");
  if (schema == "blocksworld")
    scene.schema = Schema::blocksworld();
  else if (schema == "orchard")
    scene.schema = Schema::orchard();
  else
    throw ConfigError("unknown scene schema '" + schema + "'");
  scene.width = j.value("width", 10.0);
  scene.height = j.value("height", 10.0);
  scene.epsilon = j.value("epsilon", 0.1);
  scene.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("held") && !j["held"].is_null()) scene.held = j["held"].get<std::string>();
  std::mt19937_64 rng(scene.seed);
  const double sigma = j.value("noise_sigma", 0.1);
  for (const auto& jo : j.at("objects")) {
    SceneObject o;
    o.id = jo.at("id").get<std::string>();
    const auto& pos = jo.at("position");
    o.position = {pos.at(0).get<double>(), pos.at(1).get<double>()};
    for (const auto& c : scene.schema.categories) o.attributes.push_back(jo.at(c.name).get<std::string>());
    if (jo.contains("embedding"))
      o.embedding = jo["embedding"].get<std::vector<double>>();
    else
      o.embedding = synth_embedding(scene.schema, o.attributes, sigma, rng);
    for (const auto& other : scene.objects)
      if (other.id == o.id) throw ConfigError("duplicate object id '" + o.id + "'");
    scene.objects.push_back(std::move(o));
  }
  const std::size_t dim = scene.objects.empty() ? 0 : scene.objects.front().embedding.size();
  for (const auto& o : scene.objects)
    if (o.embedding.size() != dim || dim == 0) throw ConfigError("embeddings must share one nonzero dimension");
  return scene;
}

}  // namespace secure
