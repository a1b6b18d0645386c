// Controlled-English front end: referential expressions, task instructions
// and corrections, plus the inverse rendering used for questions.
//
// Grammar (case-insensitive, optional trailing period):
//
//   refexp      := ["not"] det adj* noun [pp]
//   det         := a | an | every | all | the [num] | both | at least num
//                | at most num | exactly num | all but num | num of the num
//   pp          := relation refexp
//   relation    := to the left of | to the right of | in front of | behind
//                | inside | in | into | above | below
//   instruction := (move | put) refexp relation refexp
//   correction  := no . this is refexp
//
// Numbers are words ("one" .. "twelve") or digits. See docs/grammar.md.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "secure/logic.hpp"

namespace secure {

enum class Relation { left, right, front, behind, inside, above, below };

// Predicate name of a spatial relation ("left", "front", ...).
std::string relation_symbol(Relation r);
std::optional<Relation> relation_from_symbol(std::string_view name);
// Surface phrase ("to the left of", ...).
std::string relation_phrase(Relation r);

struct TaskInstruction {
  std::string raw;
  RefForm direct;
  Relation relation = Relation::left;
  RefForm indirect;

  friend bool operator==(const TaskInstruction&, const TaskInstruction&) = default;
};

struct Correction {
  std::string raw;
  RefForm refexp;
  ObjectId designated;
};

RefForm parse_refexp(std::string_view text);
TaskInstruction parse_instruction(std::string_view text);
Correction parse_correction(std::string_view text, const std::vector<ObjectId>& point);

// parse_refexp(render_refexp(r)) == r for forms whose nested variables follow
// the parser's naming (x, x1, x2, ...).
std::string render_refexp(const RefForm& r);
std::string render_instruction(const TaskInstruction& t);
std::string render_correction(const RefForm& r);

// Surface form of a content word: "grannysmith" -> "granny smith".
std::string surface_word(const std::string& symbol, bool plural = false);
std::string lemmatize(std::string_view plural_word);

// Content-word symbols of a referential expression's surface text, in order.
// Used to check that no word is silently dropped.
std::vector<std::string> content_words(std::string_view refexp_text);

}  // namespace secure
