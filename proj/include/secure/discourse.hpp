// Semantic analysis of embodied messages: what a designation, a correction
// or an instruction tells the agent about the domain model.

#pragma once

#include <string>
#include <vector>

#include "secure/logic.hpp"
#include "secure/parser.hpp"

namespace secure {

enum class AnalysisMode { secure, simple };

enum class ActionKind { pick, place, complete };

std::string action_name(ActionKind k);

struct QuestionAction {
  RefForm refexp;
  std::string surface;  // "show me ..."

  friend bool operator==(const QuestionAction& a, const QuestionAction& b) { return a.refexp == b.refexp; }
};

// ξ(r, {D}): the restrictor holds of every designated object. In secure
// mode, definite and universal quantifiers add that it fails of every other
// object.
Formula sentence_semantics(const RefForm& r, const std::vector<ObjectId>& designation,
                           const std::vector<ObjectId>& objects, AnalysisMode mode);
// Same, taking a referent that must have exactly one member set.
Formula sentence_semantics(const RefForm& r, const Referent& referent, const std::vector<ObjectId>& objects,
                           AnalysisMode mode);

// ζ(a, t, c).
Formula correction_semantics(ActionKind action, const TaskInstruction& t, const Correction& c);

// What the instruction itself presupposes about r: Q x.(φ, ⊤). Universal
// forms presuppose nothing.
Formula presupposition(const RefForm& r);

// Questions about r_direct then r_indirect: each with its own quantifier, the
// existential and the universal, without duplicates.
std::vector<QuestionAction> generate_questions(const TaskInstruction& t);

QuestionAction make_question(const RefForm& r);

}  // namespace secure
