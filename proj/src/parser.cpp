#include "secure/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include "secure/error.hpp"

namespace secure {

namespace {

struct Compound {
  const char* symbol;
  const char* singular;  // space-separated words
  const char* plural;
};

constexpr std::array<Compound, 4> kCompounds{{
    {"grannysmith", "granny smith", "granny smiths"},
    {"goldendelicious", "golden delicious", "golden delicious"},
    {"reddelicious", "red delicious", "red delicious"},
    {"pinklady", "pink lady", "pink ladies"},
}};

// plural -> singular
const std::map<std::string, std::string, std::less<>>& irregular_plurals() {
  static const std::map<std::string, std::string, std::less<>> table{
      {"children", "child"}, {"mice", "mouse"},     {"people", "person"},
      {"leaves", "leaf"},    {"knives", "knife"},   {"shelves", "shelf"},
      {"feet", "foot"},      {"teeth", "tooth"},    {"geese", "goose"},
      {"men", "man"},        {"women", "woman"},    {"dice", "die"},
      {"houses", "house"},   {"vases", "vase"},     {"cases", "case"},
      {"bases", "base"},     {"horses", "horse"},   {"purses", "purse"},
      {"cheeses", "cheese"}, {"roses", "rose"},     {"movies", "movie"},
      {"cookies", "cookie"}, {"tomatoes", "tomato"}, {"potatoes", "potato"},
      {"lenses", "lens"},    {"buses", "bus"},
  };
  return table;
}

const std::array<const char*, 13> kNumberWords{"zero", "one", "two",   "three", "four",
                                               "five", "six", "seven", "eight", "nine",
                                               "ten",  "eleven", "twelve"};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string pluralize(const std::string& word) {
  for (const auto& [plural, singular] : irregular_plurals())
    if (singular == word) return plural;
  if (word.size() > 1 && word.back() == 'y' &&
      std::string_view("aeiou").find(word[word.size() - 2]) == std::string_view::npos)
    return word.substr(0, word.size() - 1) + "ies";
  if (ends_with(word, "s") || ends_with(word, "x") || ends_with(word, "z") ||
      ends_with(word, "ch") || ends_with(word, "sh"))
    return word + "es";
  return word + "s";
}

std::string number_word(int n) {
  if (n >= 0 && n < static_cast<int>(kNumberWords.size())) return kNumberWords[n];
  return std::to_string(n);
}

struct Token {
  std::string text;
  std::size_t pos = 0;
  bool compound = false;  // text is already a symbol
  bool plural = false;    // compound matched in its plural form
};

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> raw;
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c) || c == '.' || c == ',' || c == '!' || c == '?') {
      ++i;
      continue;
    }
    if (!std::isalnum(c)) throw ParseError(std::string("unexpected character '") + text[i] + "'", i);
    const std::size_t start = i;
    std::string word;
    while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i])))
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i++]))));
    raw.push_back({std::move(word), start});
  }

  // Merge multi-word compounds such as "granny smith [apples]".
  std::vector<Token> out;
  for (std::size_t k = 0; k < raw.size();) {
    bool merged = false;
    for (const auto& comp : kCompounds) {
      for (const bool plural : {true, false}) {
        const auto words = split_words(plural ? comp.plural : comp.singular);
        if (k + words.size() > raw.size()) continue;
        bool match = true;
        for (std::size_t w = 0; w < words.size() && match; ++w) match = raw[k + w].text == words[w];
        if (!match) continue;
        Token t{comp.symbol, raw[k].pos, true, plural};
        std::size_t next = k + words.size();
        if (next < raw.size() && (raw[next].text == "apple" || raw[next].text == "apples")) {
          t.plural = raw[next].text == "apples";
          ++next;
        }
        out.push_back(std::move(t));
        k = next;
        merged = true;
        break;
      }
      if (merged) break;
    }
    if (!merged) out.push_back(raw[k++]);
  }
  return out;
}

std::optional<int> parse_number(std::string_view w) {
  for (std::size_t i = 0; i < kNumberWords.size(); ++i)
    if (w == kNumberWords[i]) return static_cast<int>(i);
  if (w.empty() || w.size() > 6) return std::nullopt;
  if (!std::all_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return std::nullopt;
  return std::stoi(std::string(w));
}

struct RelationPhrase {
  std::vector<std::string> words;
  Relation relation;
};

const std::vector<RelationPhrase>& relation_phrases() {
  static const std::vector<RelationPhrase> phrases{
      {{"to", "the", "left", "of"}, Relation::left},
      {{"to", "the", "right", "of"}, Relation::right},
      {{"in", "front", "of"}, Relation::front},
      {{"behind"}, Relation::behind},
      {{"inside"}, Relation::inside},
      {{"into"}, Relation::inside},
      {{"in"}, Relation::inside},
      {{"above"}, Relation::above},
      {{"below"}, Relation::below},
  };
  return phrases;
}

bool is_reserved(std::string_view w) {
  static const std::array<std::string_view, 9> reserved{"a", "an", "every", "all", "the",
                                                        "both", "not", "of", "and"};
  return std::find(reserved.begin(), reserved.end(), w) != reserved.end();
}

class RefexpParser {
 public:
  RefexpParser(const std::vector<Token>& tokens, std::size_t begin, std::size_t end, std::size_t text_size)
      : tokens_(tokens), pos_(begin), end_(end), text_size_(text_size) {}

  RefForm parse(int depth) {
    const bool negated = accept("not");
    auto [q, plural] = determiner();
    const std::string var = depth == 0 ? "x" : "x" + std::to_string(depth);

    std::vector<const Token*> words;
    while (pos_ < end_ && !relation_at(pos_)) {
      const Token& t = tokens_[pos_];
      if (!t.compound && is_reserved(t.text)) throw ParseError("unexpected word '" + t.text + "'", t.pos);
      if (!t.compound && parse_number(t.text))
        throw ParseError("unexpected number '" + t.text + "'", t.pos);
      words.push_back(&t);
      ++pos_;
    }
    if (words.empty()) throw ParseError("expected a noun", position());

    std::vector<Formula> head;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const Token& t = *words[i];
      std::string symbol = t.text;
      if (!t.compound && plural && i + 1 == words.size()) symbol = lemmatize(symbol);
      head.push_back(Formula::atom(symbol, {Term::variable(var)}));
    }
    Formula restrictor = Formula::conj(head);

    if (pos_ < end_) {
      auto [rel, width] = *relation_at(pos_);
      pos_ += width;
      if (pos_ >= end_) throw ParseError("expected a referential expression after the relation", position());
      RefForm inner = parse(depth + 1);
      Formula body = Formula::conj(
          restrictor,
          Formula::atom(relation_symbol(rel), {Term::variable(var), Term::variable(inner.variable)}));
      restrictor = Formula::quantified(inner.quantifier, inner.variable, inner.restrictor, body);
    }
    if (negated) restrictor = Formula::negate(restrictor);
    return RefForm{q, var, restrictor};
  }

  std::size_t pos() const { return pos_; }

  std::optional<std::pair<Relation, std::size_t>> relation_at(std::size_t i) const {
    for (const auto& phrase : relation_phrases()) {
      if (i + phrase.words.size() > end_) continue;
      bool match = true;
      for (std::size_t k = 0; k < phrase.words.size() && match; ++k)
        match = !tokens_[i + k].compound && tokens_[i + k].text == phrase.words[k];
      if (match) return std::pair{phrase.relation, phrase.words.size()};
    }
    return std::nullopt;
  }

 private:
  std::size_t position() const { return pos_ < end_ ? tokens_[pos_].pos : text_size_; }

  bool accept(std::string_view w) {
    if (pos_ < end_ && !tokens_[pos_].compound && tokens_[pos_].text == w) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(std::string_view w) {
    if (!accept(w)) throw ParseError("expected '" + std::string(w) + "'", position());
  }

  int number() {
    if (pos_ < end_ && !tokens_[pos_].compound) {
      if (auto n = parse_number(tokens_[pos_].text)) {
        ++pos_;
        return *n;
      }
    }
    throw ParseError("expected a number", position());
  }

  std::pair<Quantifier, bool> determiner() {
    if (pos_ >= end_) throw ParseError("expected a determiner", position());
    const Token& t = tokens_[pos_];
    const std::size_t at = t.pos;
    Quantifier q;
    bool plural = false;
    if (accept("a") || accept("an")) {
      q = Quantifier::existential();
    } else if (accept("every")) {
      q = Quantifier::universal();
    } else if (accept("all")) {
      if (accept("but")) {
        q = Quantifier::all_but(number());
      } else {
        q = Quantifier::universal();
      }
      plural = true;
    } else if (accept("the")) {
      std::optional<int> n;
      if (pos_ < end_ && !tokens_[pos_].compound) n = parse_number(tokens_[pos_].text);
      if (n) {
        ++pos_;
        q = Quantifier::the(*n);
        plural = *n != 1;
      } else {
        q = Quantifier::the(1);
      }
    } else if (accept("both")) {
      q = Quantifier::both();
      plural = true;
    } else if (accept("at")) {
      if (accept("least")) {
        q = Quantifier::at_least(number());
      } else {
        expect("most");
        q = Quantifier::at_most(number());
      }
      plural = q.n != 1;
    } else if (accept("exactly")) {
      q = Quantifier::exactly(number());
      plural = q.n != 1;
    } else if (!t.compound && parse_number(t.text)) {
      const int n = number();
      expect("of");
      expect("the");
      const int m = number();
      q = Quantifier::n_of_the(n, m);
      plural = m != 1;
    } else {
      throw ParseError("unknown determiner '" + t.text + "'", at);
    }
    if (!q.valid()) throw ParseError("invalid count for determiner", at);
    return {q, plural};
  }

  const std::vector<Token>& tokens_;
  std::size_t pos_;
  std::size_t end_;
  std::size_t text_size_;
};

RefForm parse_range(const std::vector<Token>& tokens, std::size_t begin, std::size_t end,
                    std::size_t text_size) {
  RefexpParser p(tokens, begin, end, text_size);
  RefForm r = p.parse(0);
  if (p.pos() != end) throw ParseError("unexpected trailing words", tokens[p.pos()].pos);
  return r;
}

std::string determiner_surface(const Quantifier& q) {
  switch (q.kind) {
    case QuantifierKind::a:
      return "a";
    case QuantifierKind::every:
      return "every";
    case QuantifierKind::the_n:
      return "the " + number_word(q.n);
    case QuantifierKind::both:
      return "both";
    case QuantifierKind::exactly_n:
      return "exactly " + number_word(q.n);
    case QuantifierKind::at_most_n:
      return "at most " + number_word(q.n);
    case QuantifierKind::at_least_n:
      return "at least " + number_word(q.n);
    case QuantifierKind::all_but_n:
      return "all but " + number_word(q.n);
    case QuantifierKind::n_of_the_m:
      return number_word(q.n) + " of the " + number_word(q.m);
  }
  return "a";
}

bool plural_noun(const Quantifier& q) {
  switch (q.kind) {
    case QuantifierKind::a:
    case QuantifierKind::every:
      return false;
    case QuantifierKind::both:
    case QuantifierKind::all_but_n:
      return true;
    case QuantifierKind::n_of_the_m:
      return q.m != 1;
    default:
      return q.n != 1;
  }
}

std::vector<std::string> head_symbols(const std::vector<Formula>& conjuncts, const std::string& var) {
  std::vector<std::string> out;
  for (const auto& c : conjuncts) {
    if (c.kind() != Formula::Kind::atom || c.terms().size() != 1 ||
        c.terms()[0] != Term::variable(var))
      throw Error("restrictor is not renderable: " + c.str());
    out.push_back(c.predicate());
  }
  if (out.empty()) throw Error("restrictor has no noun");
  return out;
}

std::string render(const RefForm& r) {
  Formula restrictor = r.restrictor;
  bool negated = false;
  if (restrictor.kind() == Formula::Kind::negation) {
    negated = true;
    restrictor = restrictor.operand();
  }
  std::vector<std::string> head;
  std::string pp;
  if (restrictor.kind() == Formula::Kind::quantified) {
    auto parts = restrictor.body().conjuncts();
    if (parts.empty()) throw Error("restrictor is not renderable");
    const Formula rel = parts.back();
    parts.pop_back();
    auto relation = rel.kind() == Formula::Kind::atom ? relation_from_symbol(rel.predicate()) : std::nullopt;
    if (!relation || rel.terms().size() != 2 || rel.terms()[0] != Term::variable(r.variable) ||
        rel.terms()[1] != Term::variable(restrictor.variable()))
      throw Error("restrictor is not renderable: " + restrictor.str());
    head = head_symbols(parts, r.variable);
    RefForm inner{restrictor.quantifier(), restrictor.variable(), restrictor.restrictor()};
    pp = " " + relation_phrase(*relation) + " " + render(inner);
  } else {
    head = head_symbols(restrictor.conjuncts(), r.variable);
  }

  const bool plural = plural_noun(r.quantifier);
  std::string words;
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (i) words += ' ';
    words += surface_word(head[i], plural && i + 1 == head.size());
  }
  std::string det = determiner_surface(r.quantifier);
  if (det == "a" && std::string_view("aeiou").find(words.front()) != std::string_view::npos) det = "an";
  return (negated ? "not " : "") + det + " " + words + pp;
}

}  // namespace

std::string relation_symbol(Relation r) {
  switch (r) {
    case Relation::left: return "left";
    case Relation::right: return "right";
    case Relation::front: return "front";
    case Relation::behind: return "behind";
    case Relation::inside: return "inside";
    case Relation::above: return "above";
    case Relation::below: return "below";
  }
  return "left";
}

std::optional<Relation> relation_from_symbol(std::string_view name) {
  for (auto r : {Relation::left, Relation::right, Relation::front, Relation::behind, Relation::inside,
                 Relation::above, Relation::below})
    if (relation_symbol(r) == name) return r;
  return std::nullopt;
}

std::string relation_phrase(Relation r) {
  switch (r) {
    case Relation::left: return "to the left of";
    case Relation::right: return "to the right of";
    case Relation::front: return "in front of";
    default: return relation_symbol(r);
  }
}

std::string lemmatize(std::string_view word) {
  const auto& irregular = irregular_plurals();
  if (auto it = irregular.find(word); it != irregular.end()) return it->second;
  std::string w(word);
  if (w.size() > 4 && ends_with(w, "ies")) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 3 && ends_with(w, "es")) {
    std::string_view stem(w.data(), w.size() - 2);
    if (ends_with(stem, "s") || ends_with(stem, "x") || ends_with(stem, "z") || ends_with(stem, "ch") ||
        ends_with(stem, "sh"))
      return std::string(stem);
  }
  if (w.size() > 1 && w.back() == 's' && !ends_with(w, "ss")) return w.substr(0, w.size() - 1);
  return w;
}

std::string surface_word(const std::string& symbol, bool plural) {
  for (const auto& comp : kCompounds)
    if (symbol == comp.symbol) return plural ? comp.plural : comp.singular;
  return plural ? pluralize(symbol) : symbol;
}

RefForm parse_refexp(std::string_view text) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw ParseError("empty referential expression", 0);
  return parse_range(tokens, 0, tokens.size(), text.size());
}

TaskInstruction parse_instruction(std::string_view text) {
  const auto tokens = tokenize(text);
  if (tokens.empty() || tokens[0].compound || (tokens[0].text != "move" && tokens[0].text != "put"))
    throw ParseError("instruction must start with 'move' or 'put'", tokens.empty() ? 0 : tokens[0].pos);

  RefexpParser scan(tokens, 0, tokens.size(), text.size());
  std::optional<ParseError> first_error;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    auto rel = scan.relation_at(i);
    if (!rel) continue;
    if (rel->first == Relation::above || rel->first == Relation::below) continue;
    try {
      TaskInstruction t;
      t.raw = std::string(text);
      t.direct = parse_range(tokens, 1, i, text.size());
      t.relation = rel->first;
      if (i + rel->second >= tokens.size()) throw ParseError("missing landmark expression", text.size());
      t.indirect = parse_range(tokens, i + rel->second, tokens.size(), text.size());
      return t;
    } catch (const ParseError& e) {
      if (!first_error) first_error = e;
    }
  }
  if (first_error) throw *first_error;
  throw ParseError("instruction has no spatial relation", text.size());
}

Correction parse_correction(std::string_view text, const std::vector<ObjectId>& point) {
  const auto tokens = tokenize(text);
  if (tokens.empty() || tokens[0].compound || tokens[0].text != "no")
    throw ParseError("missing corrective cue 'No.'", 0);
  if (tokens.size() < 3 || tokens[1].text != "this" || tokens[2].text != "is")
    throw ParseError("expected 'This is' after the corrective cue",
                     tokens.size() > 1 ? tokens[1].pos : text.size());
  if (point.size() != 1)
    throw ParseError("a correction designates exactly one object, got " + std::to_string(point.size()),
                     text.size());
  Correction c;
  c.raw = std::string(text);
  c.refexp = parse_range(tokens, 3, tokens.size(), text.size());
  if (c.refexp.quantifier.kind != QuantifierKind::a)
    throw ParseError("a correction describes the object with 'a' or 'an'", tokens.size() > 3 ? tokens[3].pos : 0);
  c.designated = point.front();
  return c;
}

std::string render_refexp(const RefForm& r) { return render(r); }

std::string render_instruction(const TaskInstruction& t) {
  return "move " + render(t.direct) + " " + relation_phrase(t.relation) + " " + render(t.indirect);
}

std::string render_correction(const RefForm& r) {
  return "No. This is " + render(r.with_quantifier(Quantifier::existential())) + ".";
}

std::vector<std::string> content_words(std::string_view text) {
  const auto tokens = tokenize(text);
  RefexpParser scan(tokens, 0, tokens.size(), text.size());
  static const std::array<std::string_view, 12> function_words{
      "a", "an", "every", "all", "the", "both", "not", "of", "at", "least", "most", "exactly"};
  std::vector<std::string> out;
  // The last word of each noun phrase is the head noun, lemmatised when plural.
  bool plural = false;
  std::optional<std::size_t> head;
  auto close_phrase = [&] {
    if (head && plural) out[*head] = lemmatize(out[*head]);
    head.reset();
    plural = false;
  };
  for (std::size_t i = 0; i < tokens.size();) {
    if (auto rel = scan.relation_at(i)) {
      close_phrase();
      i += rel->second;
      continue;
    }
    const Token& t = tokens[i++];
    if (t.compound) {
      out.push_back(t.text);
      head.reset();
      continue;
    }
    if (std::find(function_words.begin(), function_words.end(), t.text) != function_words.end()) {
      if (t.text == "all" || t.text == "both") plural = true;
      continue;
    }
    if (t.text == "but") continue;
    if (auto n = parse_number(t.text)) {
      // "all but N" stays plural whatever N is
      if (i < 2 || tokens[i - 2].text != "but") plural = *n != 1;
      continue;
    }
    out.push_back(t.text);
    head = out.size() - 1;
  }
  close_phrase();
  return out;
}

}  // namespace secure
