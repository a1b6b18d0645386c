#include "secure/discourse.hpp"

#include <algorithm>

#include "secure/error.hpp"

namespace secure {

std::string action_name(ActionKind k) {
  switch (k) {
    case ActionKind::pick:
      return "pick";
    case ActionKind::place:
      return "place";
    case ActionKind::complete:
      return "complete";
  }
  return "pick";
}

namespace {

bool implies_uniqueness(const Quantifier& q) {
  return q.kind == QuantifierKind::the_n || q.kind == QuantifierKind::both || q.kind == QuantifierKind::every;
}

void append_instance(std::vector<Formula>& out, const RefForm& r, const ObjectId& o) {
  for (auto& c : r.restrictor.substitute(r.variable, o).conjuncts()) out.push_back(std::move(c));
}

}  // namespace

Formula sentence_semantics(const RefForm& r, const std::vector<ObjectId>& designation,
                           const std::vector<ObjectId>& objects, AnalysisMode mode) {
  if (!r.well_formed()) throw EvalError("referential form is not well formed: " + r.str());
  std::vector<Formula> parts;
  for (const auto& o : designation) {
    if (std::find(objects.begin(), objects.end(), o) == objects.end())
      throw EvalError("designated object '" + o + "' is not in the scene");
    append_instance(parts, r, o);
  }
  if (mode == AnalysisMode::secure && implies_uniqueness(r.quantifier)) {
    for (const auto& o : objects)
      if (std::find(designation.begin(), designation.end(), o) == designation.end())
        parts.push_back(Formula::negate(r.restrictor.substitute(r.variable, o)));
  }
  return Formula::conj(parts);
}

Formula sentence_semantics(const RefForm& r, const Referent& referent, const std::vector<ObjectId>& objects,
                           AnalysisMode mode) {
  if (referent.size() != 1)
    throw AmbiguityError("sentence analysis needs exactly one designated set, got " +
                         std::to_string(referent.size()));
  return sentence_semantics(r, referent.front(), objects, mode);
}

Formula correction_semantics(ActionKind action, const TaskInstruction& t, const Correction& c) {
  const std::vector<ObjectId> point{c.designated};
  // Objects outside the designation are irrelevant for existential forms.
  const Formula stated = sentence_semantics(c.refexp.with_quantifier(Quantifier::existential()), point, point,
                                            AnalysisMode::secure);
  switch (action) {
    case ActionKind::pick:
      return Formula::conj(stated, Formula::negate(t.direct.restrictor.substitute(t.direct.variable, c.designated)));
    case ActionKind::place:
      return Formula::conj(stated,
                           Formula::negate(t.indirect.restrictor.substitute(t.indirect.variable, c.designated)));
    case ActionKind::complete:
      return stated;
  }
  throw Error("unknown execution action");
}

Formula presupposition(const RefForm& r) {
  if (r.quantifier.kind == QuantifierKind::every) return Formula::top();
  return Formula::quantified(r.quantifier, r.variable, r.restrictor, Formula::top());
}

QuestionAction make_question(const RefForm& r) { return {r, "show me " + render_refexp(r)}; }

std::vector<QuestionAction> generate_questions(const TaskInstruction& t) {
  std::vector<QuestionAction> out;
  for (const RefForm* r : {&t.direct, &t.indirect}) {
    for (const Quantifier q : {r->quantifier, Quantifier::existential(), Quantifier::universal()}) {
      QuestionAction candidate = make_question(r->with_quantifier(q));
      if (std::find(out.begin(), out.end(), candidate) == out.end()) out.push_back(std::move(candidate));
    }
  }
  return out;
}

}  // namespace secure
