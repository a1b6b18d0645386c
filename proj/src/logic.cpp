#include "secure/logic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <sstream>
#include <utility>

#include "secure/error.hpp"

namespace secure {

// ---------------------------------------------------------------------------
// Quantifier

bool Quantifier::takes_n() const noexcept {
  switch (kind) {
    case QuantifierKind::a:
    case QuantifierKind::every:
    case QuantifierKind::both:
      return false;
    default:
      return true;
  }
}

bool Quantifier::valid() const noexcept {
  if (n < 0 || m < 0) return false;
  switch (kind) {
    case QuantifierKind::a:
    case QuantifierKind::every:
    case QuantifierKind::both:
      return n == 0 && m == 0;
    case QuantifierKind::the_n:
      return n >= 1 && m == 0;
    case QuantifierKind::n_of_the_m:
      return m >= n && m >= 1;
    default:
      return m == 0;
  }
}

bool Quantifier::holds(std::size_t restrictor, std::size_t overlap) const noexcept {
  const auto un = static_cast<std::size_t>(n);
  const auto um = static_cast<std::size_t>(m);
  switch (kind) {
    case QuantifierKind::exactly_n:
      return overlap == un;
    case QuantifierKind::at_most_n:
      return overlap <= un;
    case QuantifierKind::at_least_n:
      return overlap >= un;
    case QuantifierKind::a:
      return overlap >= 1;
    case QuantifierKind::every:
      return overlap == restrictor;
    case QuantifierKind::the_n:
      return overlap == un && restrictor == un;
    case QuantifierKind::both:
      return overlap == 2 && restrictor == 2;
    case QuantifierKind::all_but_n:
      return restrictor > un && overlap == restrictor - un;
    case QuantifierKind::n_of_the_m:
      return overlap == un && restrictor == um;
  }
  return false;
}

bool Quantifier::admits(std::size_t size, std::size_t domain) const noexcept {
  const auto un = static_cast<std::size_t>(n);
  const auto um = static_cast<std::size_t>(m);
  if (size > domain) return false;
  switch (kind) {
    case QuantifierKind::exactly_n:
      return size == un;
    case QuantifierKind::at_most_n:
      return size <= un;
    case QuantifierKind::at_least_n:
      return size >= un;
    case QuantifierKind::a:
      return size == 1;
    case QuantifierKind::every:
      return size == domain;
    case QuantifierKind::the_n:
      return size == domain && domain == un;
    case QuantifierKind::both:
      return size == domain && domain == 2;
    case QuantifierKind::all_but_n:
      return domain > un && size == domain - un;
    case QuantifierKind::n_of_the_m:
      return size == un && domain == um;
  }
  return false;
}

bool Quantifier::definite() const noexcept {
  return kind == QuantifierKind::the_n || kind == QuantifierKind::both ||
         kind == QuantifierKind::every;
}

std::string Quantifier::name() const {
  const std::string ns = std::to_string(n);
  switch (kind) {
    case QuantifierKind::exactly_n:
      return "_exactly_" + ns + "_q";
    case QuantifierKind::at_most_n:
      return "_at_most_" + ns + "_q";
    case QuantifierKind::at_least_n:
      return "_at_least_" + ns + "_q";
    case QuantifierKind::a:
      return "_a_q";
    case QuantifierKind::every:
      return "_every_q";
    case QuantifierKind::the_n:
      return "_the_" + ns + "_q";
    case QuantifierKind::both:
      return "_both_q";
    case QuantifierKind::all_but_n:
      return "_all_but_" + ns + "_q";
    case QuantifierKind::n_of_the_m:
      return "_" + ns + "_of_the_" + std::to_string(m) + "_q";
  }
  return "_a_q";
}

namespace {

std::optional<int> parse_count(std::string_view s) {
  if (s == "one") return 1;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

bool consume_prefix(std::string_view& s, std::string_view prefix) {
  if (s.substr(0, prefix.size()) != prefix) return false;
  s.remove_prefix(prefix.size());
  return true;
}

}  // namespace

std::optional<Quantifier> quantifier_from_name(std::string_view name) {
  if (name.size() < 4 || name.front() != '_' || name.substr(name.size() - 2) != "_q")
    return std::nullopt;
  std::string_view core = name.substr(1, name.size() - 3);
  if (core == "a") return Quantifier::existential();
  if (core == "every") return Quantifier::universal();
  if (core == "both") return Quantifier::both();

  std::optional<Quantifier> q;
  std::string_view rest = core;
  if (consume_prefix(rest, "the_")) {
    if (auto n = parse_count(rest)) q = Quantifier::the(*n);
  } else if (consume_prefix(rest, "exactly_")) {
    if (auto n = parse_count(rest)) q = Quantifier::exactly(*n);
  } else if (consume_prefix(rest, "at_most_")) {
    if (auto n = parse_count(rest)) q = Quantifier::at_most(*n);
  } else if (consume_prefix(rest, "at_least_")) {
    if (auto n = parse_count(rest)) q = Quantifier::at_least(*n);
  } else if (consume_prefix(rest, "all_but_")) {
    if (auto n = parse_count(rest)) q = Quantifier::all_but(*n);
  } else if (auto pos = rest.find("_of_the_"); pos != std::string_view::npos) {
    auto n = parse_count(rest.substr(0, pos));
    auto m = parse_count(rest.substr(pos + 8));
    if (n && m) q = Quantifier::n_of_the(*n, *m);
  }
  if (q && !q->valid()) return std::nullopt;
  return q;
}

// ---------------------------------------------------------------------------
// Formula

struct Formula::Node {
  Kind kind = Kind::truth;
  std::string predicate;  // atom
  std::vector<Term> terms;
  Quantifier quantifier;  // quantified
  std::string variable;
  std::vector<Formula> children;  // operand | lhs,rhs | restrictor,body
};

Formula::Formula() : Formula(top()) {}

Formula::Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Formula Formula::top() {
  static const auto node = [] {
    auto n = std::make_shared<Node>();
    n->kind = Kind::truth;
    return n;
  }();
  return Formula(node);
}

Formula Formula::bottom() {
  static const auto node = [] {
    auto n = std::make_shared<Node>();
    n->kind = Kind::falsity;
    return n;
  }();
  return Formula(node);
}

Formula Formula::atom(std::string predicate, std::vector<Term> terms) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::atom;
  n->predicate = std::move(predicate);
  n->terms = std::move(terms);
  return Formula(std::move(n));
}

namespace {

Term term_from(std::string_view id) {
  // Variables are written x, x1, x12, ...; everything else is a constant.
  const bool variable =
      !id.empty() && id[0] == 'x' &&
      std::all_of(id.begin() + 1, id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  return variable ? Term::variable(std::string(id)) : Term::constant(std::string(id));
}

}  // namespace

Formula Formula::atom(std::string predicate, std::string_view first) {
  return atom(std::move(predicate), std::vector<Term>{term_from(first)});
}

Formula Formula::atom(std::string predicate, std::string_view first, std::string_view second) {
  return atom(std::move(predicate), std::vector<Term>{term_from(first), term_from(second)});
}

Formula Formula::negate(Formula operand) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::negation;
  n->children.push_back(std::move(operand));
  return Formula(std::move(n));
}

namespace {

template <typename NodeT>
std::shared_ptr<NodeT> binary_node(Formula::Kind kind, Formula lhs, Formula rhs) {
  auto n = std::make_shared<NodeT>();
  n->kind = kind;
  n->children.push_back(std::move(lhs));
  n->children.push_back(std::move(rhs));
  return n;
}

}  // namespace

Formula Formula::conj(Formula lhs, Formula rhs) {
  return Formula(binary_node<Node>(Kind::conjunction, std::move(lhs), std::move(rhs)));
}

Formula Formula::disj(Formula lhs, Formula rhs) {
  return Formula(binary_node<Node>(Kind::disjunction, std::move(lhs), std::move(rhs)));
}

Formula Formula::implies(Formula lhs, Formula rhs) {
  return Formula(binary_node<Node>(Kind::implication, std::move(lhs), std::move(rhs)));
}

Formula Formula::iff(Formula lhs, Formula rhs) {
  return Formula(binary_node<Node>(Kind::biconditional, std::move(lhs), std::move(rhs)));
}

Formula Formula::quantified(Quantifier q, std::string variable, Formula restrictor, Formula body) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::quantified;
  n->quantifier = q;
  n->variable = std::move(variable);
  n->children.push_back(std::move(restrictor));
  n->children.push_back(std::move(body));
  return Formula(std::move(n));
}

Formula Formula::conj(std::span<const Formula> parts) {
  if (parts.empty()) return top();
  Formula out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out = conj(out, parts[i]);
  return out;
}

Formula::Kind Formula::kind() const noexcept { return node_->kind; }

bool Formula::is_binary() const noexcept {
  switch (node_->kind) {
    case Kind::conjunction:
    case Kind::disjunction:
    case Kind::implication:
    case Kind::biconditional:
      return true;
    default:
      return false;
  }
}

const std::string& Formula::predicate() const {
  if (kind() != Kind::atom) throw EvalError("predicate() on a non-atomic formula");
  return node_->predicate;
}

std::span<const Term> Formula::terms() const {
  if (kind() != Kind::atom) throw EvalError("terms() on a non-atomic formula");
  return node_->terms;
}

const Formula& Formula::operand() const {
  if (kind() != Kind::negation) throw EvalError("operand() on a non-negation");
  return node_->children[0];
}

const Formula& Formula::lhs() const {
  if (!is_binary()) throw EvalError("lhs() on a non-binary formula");
  return node_->children[0];
}

const Formula& Formula::rhs() const {
  if (!is_binary()) throw EvalError("rhs() on a non-binary formula");
  return node_->children[1];
}

const Quantifier& Formula::quantifier() const {
  if (kind() != Kind::quantified) throw EvalError("quantifier() on an unquantified formula");
  return node_->quantifier;
}

const std::string& Formula::variable() const {
  if (kind() != Kind::quantified) throw EvalError("variable() on an unquantified formula");
  return node_->variable;
}

const Formula& Formula::restrictor() const {
  if (kind() != Kind::quantified) throw EvalError("restrictor() on an unquantified formula");
  return node_->children[0];
}

const Formula& Formula::body() const {
  if (kind() != Kind::quantified) throw EvalError("body() on an unquantified formula");
  return node_->children[1];
}

namespace {

void collect_free(const Formula& f, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      for (const auto& t : f.terms())
        if (t.kind == Term::Kind::variable && !bound.contains(t.id)) out.insert(t.id);
      return;
    case Formula::Kind::negation:
      collect_free(f.operand(), bound, out);
      return;
    case Formula::Kind::quantified: {
      const bool fresh = bound.insert(f.variable()).second;
      collect_free(f.restrictor(), bound, out);
      collect_free(f.body(), bound, out);
      if (fresh) bound.erase(f.variable());
      return;
    }
    case Formula::Kind::truth:
    case Formula::Kind::falsity:
      return;
    default:
      collect_free(f.lhs(), bound, out);
      collect_free(f.rhs(), bound, out);
  }
}

}  // namespace

std::set<std::string> Formula::free_variables() const {
  std::set<std::string> bound;
  std::set<std::string> out;
  collect_free(*this, bound, out);
  return out;
}

std::vector<Symbol> Formula::symbols() const {
  std::vector<Symbol> out;
  std::function<void(const Formula&)> walk = [&](const Formula& f) {
    switch (f.kind()) {
      case Kind::atom: {
        Symbol s{f.predicate(), static_cast<int>(f.terms().size())};
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
        return;
      }
      case Kind::truth:
      case Kind::falsity:
        return;
      default:
        for (const auto& c : f.node_->children) walk(c);
    }
  };
  walk(*this);
  return out;
}

Formula Formula::replace(const std::string& variable, const Term& term) const {
  switch (kind()) {
    case Kind::truth:
    case Kind::falsity:
      return *this;
    case Kind::atom: {
      bool touched = false;
      std::vector<Term> terms = node_->terms;
      for (auto& t : terms) {
        if (t.kind == Term::Kind::variable && t.id == variable) {
          t = term;
          touched = true;
        }
      }
      return touched ? atom(node_->predicate, std::move(terms)) : *this;
    }
    case Kind::negation:
      return negate(operand().replace(variable, term));
    case Kind::quantified:
      if (node_->variable == variable) return *this;
      return quantified(node_->quantifier, node_->variable, restrictor().replace(variable, term),
                        body().replace(variable, term));
    default: {
      auto n = std::make_shared<Node>();
      n->kind = kind();
      n->children.push_back(lhs().replace(variable, term));
      n->children.push_back(rhs().replace(variable, term));
      return Formula(std::move(n));
    }
  }
}

Formula Formula::substitute(const std::string& variable, const ObjectId& object) const {
  return replace(variable, Term::constant(object));
}

Formula Formula::rename(const std::string& from, const std::string& to) const {
  return replace(from, Term::variable(to));
}

std::vector<Formula> Formula::conjuncts() const {
  std::vector<Formula> out;
  std::function<void(const Formula&)> walk = [&](const Formula& f) {
    if (f.kind() == Kind::conjunction) {
      walk(f.lhs());
      walk(f.rhs());
    } else if (f.kind() != Kind::truth) {
      out.push_back(f);
    }
  };
  walk(*this);
  return out;
}

bool Formula::well_formed() const {
  std::set<std::string> bound;
  std::function<bool(const Formula&)> check = [&](const Formula& f) -> bool {
    switch (f.kind()) {
      case Kind::truth:
      case Kind::falsity:
        return true;
      case Kind::atom:
        return !f.predicate().empty() && !f.terms().empty() && f.terms().size() <= 2;
      case Kind::negation:
        return check(f.operand());
      case Kind::quantified: {
        if (!f.quantifier().valid() || f.variable().empty()) return false;
        if (!bound.insert(f.variable()).second) return false;
        const bool ok = check(f.restrictor()) && check(f.body());
        bound.erase(f.variable());
        return ok;
      }
      default:
        return check(f.lhs()) && check(f.rhs());
    }
  };
  return check(*this);
}

namespace {

const char* connective(Formula::Kind k) {
  switch (k) {
    case Formula::Kind::conjunction:
      return " & ";
    case Formula::Kind::disjunction:
      return " | ";
    case Formula::Kind::implication:
      return " -> ";
    case Formula::Kind::biconditional:
      return " <-> ";
    default:
      return "";
  }
}

void write(std::ostream& os, const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::truth:
      os << "true";
      return;
    case Formula::Kind::falsity:
      os << "false";
      return;
    case Formula::Kind::atom: {
      os << f.predicate() << '(';
      bool first = true;
      for (const auto& t : f.terms()) {
        if (!first) os << ',';
        os << t.id;
        first = false;
      }
      os << ')';
      return;
    }
    case Formula::Kind::negation:
      os << "neg(";
      write(os, f.operand());
      os << ')';
      return;
    case Formula::Kind::quantified:
      os << f.quantifier().name() << ' ' << f.variable() << ".(";
      write(os, f.restrictor());
      os << ", ";
      write(os, f.body());
      os << ')';
      return;
    default: {
      // Chains of one connective associate to the left; anything else nested
      // gets parentheses.
      const bool wrap_lhs = f.lhs().is_binary() && f.lhs().kind() != f.kind();
      const bool wrap_rhs = f.rhs().is_binary();
      if (wrap_lhs) os << '(';
      write(os, f.lhs());
      if (wrap_lhs) os << ')';
      os << connective(f.kind());
      if (wrap_rhs) os << '(';
      write(os, f.rhs());
      if (wrap_rhs) os << ')';
    }
  }
}

}  // namespace

std::string Formula::str() const {
  std::ostringstream os;
  write(os, *this);
  return os.str();
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  return x.kind == y.kind && x.predicate == y.predicate && x.terms == y.terms &&
         x.quantifier == y.quantifier && x.variable == y.variable && x.children == y.children;
}

// ---------------------------------------------------------------------------
// Text parsing

namespace {

enum class Tok { ident, lparen, rparen, comma, dot, amp, bar, arrow, darrow, langle, rangle, neg_sign, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto starts = [&](std::string_view lit) { return s.substr(i, lit.size()) == lit; };
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalnum(c) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::ident, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (starts("<->")) { out.push_back({Tok::darrow, "<->", start}); i += 3; continue; }
    if (starts("->")) { out.push_back({Tok::arrow, "->", start}); i += 2; continue; }
    if (starts("∧")) { out.push_back({Tok::amp, "&", start}); i += 3; continue; }
    if (starts("∨")) { out.push_back({Tok::bar, "|", start}); i += 3; continue; }
    if (starts("→")) { out.push_back({Tok::arrow, "->", start}); i += 3; continue; }
    if (starts("↔")) { out.push_back({Tok::darrow, "<->", start}); i += 3; continue; }
    if (starts("¬")) { out.push_back({Tok::neg_sign, "~", start}); i += 2; continue; }
    if (starts("⟨")) { out.push_back({Tok::langle, "<", start}); i += 3; continue; }
    if (starts("⟩")) { out.push_back({Tok::rangle, ">", start}); i += 3; continue; }
    switch (c) {
      case '(': out.push_back({Tok::lparen, "(", start}); break;
      case ')': out.push_back({Tok::rparen, ")", start}); break;
      case ',': out.push_back({Tok::comma, ",", start}); break;
      case '.': out.push_back({Tok::dot, ".", start}); break;
      case '&': out.push_back({Tok::amp, "&", start}); break;
      case '|': out.push_back({Tok::bar, "|", start}); break;
      case '<': out.push_back({Tok::langle, "<", start}); break;
      case '>': out.push_back({Tok::rangle, ">", start}); break;
      case '~': out.push_back({Tok::neg_sign, "~", start}); break;
      default:
        throw ParseError(std::string("unexpected character '") + static_cast<char>(c) + "'", start);
    }
    ++i;
  }
  out.push_back({Tok::end, "", s.size()});
  return out;
}

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view text) : tokens_(tokenize(text)) {}

  Formula parse_all() {
    Formula f = parse_iff();
    expect(Tok::end, "end of input");
    return f;
  }

  RefForm parse_refform_all() {
    expect(Tok::langle, "'<'");
    RefForm r;
    r.quantifier = parse_quantifier();
    r.variable = expect(Tok::ident, "variable").text;
    expect(Tok::dot, "'.'");
    bound_.push_back(r.variable);
    r.restrictor = parse_iff();
    bound_.pop_back();
    expect(Tok::rangle, "'>'");
    expect(Tok::end, "end of input");
    return r;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind)
      throw ParseError(std::string("expected ") + what + ", found '" + peek().text + "'", peek().pos);
    return tokens_[pos_++];
  }

  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    ++pos_;
    return true;
  }

  Quantifier parse_quantifier() {
    const Token& t = expect(Tok::ident, "quantifier");
    auto q = quantifier_from_name(t.text);
    if (!q) throw ParseError("unknown quantifier '" + t.text + "'", t.pos);
    return *q;
  }

  Formula parse_iff() {
    Formula f = parse_implies();
    while (accept(Tok::darrow)) f = Formula::iff(f, parse_implies());
    return f;
  }

  Formula parse_implies() {
    Formula f = parse_or();
    while (accept(Tok::arrow)) f = Formula::implies(f, parse_or());
    return f;
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (accept(Tok::bar)) f = Formula::disj(f, parse_and());
    return f;
  }

  Formula parse_and() {
    Formula f = parse_unary();
    while (accept(Tok::amp)) f = Formula::conj(f, parse_unary());
    return f;
  }

  Term make_term(const std::string& id) const {
    if (std::find(bound_.begin(), bound_.end(), id) != bound_.end()) return Term::variable(id);
    return term_from(id);
  }

  Formula parse_unary() {
    if (accept(Tok::neg_sign)) return Formula::negate(parse_unary());
    if (accept(Tok::lparen)) {
      Formula f = parse_iff();
      expect(Tok::rparen, "')'");
      return f;
    }
    const Token& t = expect(Tok::ident, "formula");
    if (t.text == "true") return Formula::top();
    if (t.text == "false") return Formula::bottom();
    if (t.text == "neg" && peek().kind == Tok::lparen) {
      ++pos_;
      Formula f = parse_iff();
      expect(Tok::rparen, "')'");
      return Formula::negate(f);
    }
    if (t.text.front() == '_') {
      auto q = quantifier_from_name(t.text);
      if (!q) throw ParseError("unknown quantifier '" + t.text + "'", t.pos);
      std::string var = expect(Tok::ident, "variable").text;
      expect(Tok::dot, "'.'");
      expect(Tok::lparen, "'('");
      bound_.push_back(var);
      Formula restrictor = parse_iff();
      expect(Tok::comma, "','");
      Formula body = parse_iff();
      bound_.pop_back();
      expect(Tok::rparen, "')'");
      return Formula::quantified(*q, std::move(var), std::move(restrictor), std::move(body));
    }
    expect(Tok::lparen, "'('");
    std::vector<Term> terms;
    do {
      terms.push_back(make_term(expect(Tok::ident, "term").text));
    } while (accept(Tok::comma));
    expect(Tok::rparen, "')'");
    return Formula::atom(t.text, std::move(terms));
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::string> bound_;
};

}  // namespace

Formula parse_formula(std::string_view text) { return FormulaParser(text).parse_all(); }

RefForm parse_refform(std::string_view text) {
  RefForm r = FormulaParser(text).parse_refform_all();
  if (!r.well_formed())
    throw ParseError("referential form must have exactly one free variable '" + r.variable + "'", 0);
  return r;
}

// ---------------------------------------------------------------------------
// RefForm

bool RefForm::well_formed() const {
  if (!quantifier.valid() || !restrictor.well_formed()) return false;
  const auto free = restrictor.free_variables();
  return free.size() == 1 && *free.begin() == variable;
}

std::string RefForm::str() const {
  return "<" + quantifier.name() + " " + variable + ". " + restrictor.str() + ">";
}

// ---------------------------------------------------------------------------
// DomainModel

DomainModel::DomainModel(std::vector<ObjectId> objects, std::vector<Symbol> vocabulary)
    : objects_(std::move(objects)) {
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (!index_.emplace(objects_[i], i).second)
      throw EvalError("duplicate object constant '" + objects_[i] + "'");
  }
  for (const auto& s : vocabulary) add_symbol(s);
}

std::optional<std::size_t> DomainModel::index_of(const ObjectId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Symbol> DomainModel::symbol(const std::string& name) const {
  for (const auto& s : vocabulary_)
    if (s.name == name) return s;
  return std::nullopt;
}

void DomainModel::add_symbol(const Symbol& symbol) {
  if (symbol.name.empty() || symbol.arity < 1 || symbol.arity > 2)
    throw EvalError("invalid symbol '" + symbol.name + "'");
  if (auto existing = this->symbol(symbol.name)) {
    if (existing->arity != symbol.arity)
      throw EvalError("symbol '" + symbol.name + "' redeclared with a different arity");
    return;
  }
  vocabulary_.push_back(symbol);
  interpretation_[symbol.name];
}

void DomainModel::add(const std::string& predicate, const std::vector<ObjectId>& tuple) {
  auto s = symbol(predicate);
  if (!s) throw EvalError("unknown symbol '" + predicate + "'");
  if (static_cast<int>(tuple.size()) != s->arity)
    throw EvalError("arity mismatch for '" + predicate + "'");
  std::vector<std::size_t> idx;
  for (const auto& id : tuple) {
    auto i = index_of(id);
    if (!i) throw EvalError("unknown object '" + id + "'");
    idx.push_back(*i);
  }
  interpretation_[predicate].insert(std::move(idx));
}

bool DomainModel::holds(const std::string& predicate, const std::vector<std::size_t>& tuple) const {
  auto it = interpretation_.find(predicate);
  if (it == interpretation_.end()) throw EvalError("unknown symbol '" + predicate + "'");
  return it->second.contains(tuple);
}

const std::set<std::vector<std::size_t>>& DomainModel::denotation(const std::string& predicate) const {
  auto it = interpretation_.find(predicate);
  if (it == interpretation_.end()) throw EvalError("unknown symbol '" + predicate + "'");
  return it->second;
}

DomainModel DomainModel::restricted(const std::vector<ObjectId>& keep) const {
  std::vector<ObjectId> objs;
  std::vector<std::size_t> old_index;
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (std::find(keep.begin(), keep.end(), objects_[i]) != keep.end()) {
      objs.push_back(objects_[i]);
      old_index.push_back(i);
    }
  }
  DomainModel out(objs, vocabulary_);
  for (const auto& [pred, tuples] : interpretation_) {
    for (const auto& tuple : tuples) {
      std::vector<ObjectId> ids;
      bool inside = true;
      for (auto i : tuple) {
        auto pos = std::find(old_index.begin(), old_index.end(), i);
        if (pos == old_index.end()) {
          inside = false;
          break;
        }
        ids.push_back(objects_[i]);
      }
      if (inside) out.add(pred, ids);
    }
  }
  return out;
}

std::vector<Formula> herbrand_base(const std::vector<ObjectId>& objects,
                                   const std::vector<Symbol>& vocabulary) {
  std::vector<Formula> out;
  for (const auto& s : vocabulary) {
    if (s.arity == 1) {
      for (const auto& o : objects) out.push_back(Formula::atom(s.name, {Term::constant(o)}));
    } else {
      for (const auto& a : objects)
        for (const auto& b : objects)
          out.push_back(Formula::atom(s.name, {Term::constant(a), Term::constant(b)}));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

class Evaluator {
 public:
  explicit Evaluator(const DomainModel& model) : model_(model) {}

  bool eval(const Formula& f, Assignment& g) const {
    switch (f.kind()) {
      case Formula::Kind::truth:
        return true;
      case Formula::Kind::falsity:
        return false;
      case Formula::Kind::atom: {
        auto s = model_.symbol(f.predicate());
        if (!s) throw EvalError("unknown symbol '" + f.predicate() + "'");
        if (static_cast<std::size_t>(s->arity) != f.terms().size())
          throw EvalError("arity mismatch for '" + f.predicate() + "'");
        std::vector<std::size_t> tuple;
        tuple.reserve(f.terms().size());
        for (const auto& t : f.terms()) tuple.push_back(resolve(t, g));
        return model_.holds(f.predicate(), tuple);
      }
      case Formula::Kind::negation:
        return !eval(f.operand(), g);
      case Formula::Kind::conjunction:
        return eval(f.lhs(), g) && eval(f.rhs(), g);
      case Formula::Kind::disjunction:
        return eval(f.lhs(), g) || eval(f.rhs(), g);
      case Formula::Kind::implication:
        return !eval(f.lhs(), g) || eval(f.rhs(), g);
      case Formula::Kind::biconditional:
        return eval(f.lhs(), g) == eval(f.rhs(), g);
      case Formula::Kind::quantified: {
        // λx.φ and λx.ψ evaluated by substitution per object.
        const std::string& x = f.variable();
        std::optional<ObjectId> saved;
        if (auto it = g.find(x); it != g.end()) saved = it->second;
        std::size_t restrictor = 0;
        std::size_t overlap = 0;
        for (const auto& o : model_.objects()) {
          g[x] = o;
          const bool in_r = eval(f.restrictor(), g);
          const bool in_b = eval(f.body(), g);
          restrictor += in_r ? 1 : 0;
          overlap += (in_r && in_b) ? 1 : 0;
        }
        if (saved)
          g[x] = *saved;
        else
          g.erase(x);
        return f.quantifier().holds(restrictor, overlap);
      }
    }
    return false;
  }

 private:
  std::size_t resolve(const Term& t, const Assignment& g) const {
    const ObjectId* id = &t.id;
    if (t.kind == Term::Kind::variable) {
      auto it = g.find(t.id);
      if (it == g.end()) throw EvalError("unbound variable '" + t.id + "'");
      id = &it->second;
    }
    auto i = model_.index_of(*id);
    if (!i) throw EvalError("unknown object '" + *id + "'");
    return *i;
  }

  const DomainModel& model_;
};

}  // namespace

bool eval_formula(const DomainModel& model, const Assignment& g, const Formula& phi) {
  Assignment local = g;
  return Evaluator(model).eval(phi, local);
}

DomainModel project_model(const DomainModel& model, const Formula& phi, const std::string& variable) {
  for (const auto& v : phi.free_variables())
    if (v != variable) throw EvalError("projection formula has a second free variable '" + v + "'");
  Evaluator ev(model);
  std::vector<ObjectId> keep;
  Assignment g;
  for (const auto& o : model.objects()) {
    g[variable] = o;
    if (ev.eval(phi, g)) keep.push_back(o);
  }
  return model.restricted(keep);
}

Referent referent_of(const DomainModel& model, const RefForm& r) {
  const DomainModel projected = project_model(model, r.restrictor, r.variable);
  const auto& objs = projected.objects();
  const std::size_t k = objs.size();
  Referent out;
  for (std::size_t size = 0; size <= k; ++size) {
    if (!r.quantifier.admits(size, k)) continue;
    // All size-combinations of the projected objects, lexicographic.
    std::vector<std::size_t> pick(size);
    for (std::size_t i = 0; i < size; ++i) pick[i] = i;
    while (true) {
      std::vector<ObjectId> member;
      member.reserve(size);
      for (auto i : pick) member.push_back(objs[i]);
      out.push_back(std::move(member));
      std::size_t i = size;
      while (i > 0 && pick[i - 1] == k - size + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return out;
}

}  // namespace secure
