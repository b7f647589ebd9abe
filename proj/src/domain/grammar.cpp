#include "dpp/domain/grammar.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dpp/error.hpp"

namespace dpp {

void Grammar::validate() const {
  std::set<std::string> defined;
  for (const auto& r : rules) defined.insert(r.lhs);
  if (!defined.count(start)) throw ConfigError("start symbol has no rules: " + start);
  for (const auto& r : rules)
    for (const auto& s : r.rhs)
      if (s.nonterminal && !defined.count(s.name)) throw ConfigError("unreachable nonterminal: " + s.name);
  std::set<std::string> seen{start};
  std::vector<std::string> frontier{start};
  while (!frontier.empty()) {
    const std::string cur = frontier.back();
    frontier.pop_back();
    for (const auto& r : rules) {
      if (r.lhs != cur) continue;
      for (const auto& s : r.rhs)
        if (s.nonterminal && seen.insert(s.name).second) frontier.push_back(s.name);
    }
  }
  for (const auto& d : defined)
    if (!seen.count(d)) throw ConfigError("unreachable nonterminal: " + d);
}

namespace {

struct Derivation {
  std::vector<std::string> words;
  SemValue value;
};

class Enumerator {
 public:
  explicit Enumerator(const Grammar& g) : g_(g) {}

  const std::vector<Derivation>& derive(const std::string& sym, int depth) {
    auto key = std::make_pair(sym, depth);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<Derivation> out;
    if (depth >= 1) {
      for (const auto& rule : g_.rules) {
        if (rule.lhs != sym) continue;
        expand(rule, 0, depth - 1, {}, {}, out);
      }
    }
    return memo_.emplace(key, std::move(out)).first->second;
  }

 private:
  void expand(const GrammarRule& rule, std::size_t i, int child_depth, std::vector<std::string> words,
              std::vector<SemValue> values, std::vector<Derivation>& out) {
    if (i == rule.rhs.size()) {
      out.push_back({std::move(words), apply(rule, values)});
      return;
    }
    const Symbol& s = rule.rhs[i];
    if (!s.nonterminal) {
      words.push_back(s.name);
      expand(rule, i + 1, child_depth, std::move(words), std::move(values), out);
      return;
    }
    // Copy: derive() may rehash memo_ while we iterate.
    const std::vector<Derivation> children = derive(s.name, child_depth);
    for (const auto& child : children) {
      auto w = words;
      w.insert(w.end(), child.words.begin(), child.words.end());
      auto v = values;
      v.push_back(child.value);
      expand(rule, i + 1, child_depth, std::move(w), std::move(v), out);
    }
  }

  static SemValue apply(const GrammarRule& rule, const std::vector<SemValue>& values) {
    if (rule.action) return rule.action(values);
    if (values.size() == 1) return values.front();
    std::vector<std::string> words;
    for (const auto& s : rule.rhs) words.push_back(s.name);
    return join(words);
  }

  const Grammar& g_;
  std::map<std::pair<std::string, int>, std::vector<Derivation>> memo_;
};

}  // namespace

std::vector<CanonicalPair> enumerate_pairs(const Grammar& grammar, int depth_bound) {
  grammar.validate();
  if (depth_bound <= 0) return {};
  Enumerator en(grammar);
  const auto& derivations = en.derive(grammar.start, depth_bound);
  std::map<std::string, std::string> utterance_to_lf;
  std::map<std::string, CanonicalPair> by_lf;
  for (const auto& d : derivations) {
    const auto* lf = std::get_if<LogicalForm>(&d.value);
    if (lf == nullptr || d.words.empty()) continue;
    const std::string text = join(d.words);
    const std::string key = lf->serialize();
    auto [it, fresh] = utterance_to_lf.emplace(text, key);
    if (!fresh && it->second != key)
      throw ConfigError("ambiguous grammar: '" + text + "' derives " + it->second + " and " + key);
    if (!fresh) continue;
    if (by_lf.count(key))
      throw ConfigError("logical form " + key + " has more than one canonical utterance");
    by_lf.emplace(key, CanonicalPair{Utterance(d.words, UtteranceKind::Canonical), *lf});
  }
  std::vector<CanonicalPair> out;
  out.reserve(by_lf.size());
  for (auto& [key, pair] : by_lf) out.push_back(std::move(pair));
  return out;
}

namespace {

const std::string& atom(const SemValue& v) { return std::get<std::string>(v); }
const LogicalForm& form(const SemValue& v) { return std::get<LogicalForm>(v); }

Comparator comparator(const std::string& op) {
  if (op == ">=") return Comparator::Ge;
  if (op == "<=") return Comparator::Le;
  return Comparator::Eq;
}

std::vector<Symbol> words(std::initializer_list<const char*> ws) {
  std::vector<Symbol> out;
  for (const char* w : ws) out.push_back(Symbol::t(w));
  return out;
}

// A lexical rule: lhs -> phrase, producing `value` as an atom.
GrammarRule lexeme(const std::string& lhs, std::initializer_list<const char*> phrase, std::string value) {
  return {lhs, words(phrase), [value](const std::vector<SemValue>&) -> SemValue { return value; }};
}

}  // namespace

Grammar basketball_grammar() {
  Grammar g;
  g.start = "$ROOT";
  auto& r = g.rules;

  r.push_back({"$ROOT", {Symbol::nt("$SET")}, nullptr});
  r.push_back({"$ROOT", {Symbol::t("number"), Symbol::t("of"), Symbol::nt("$SET")},
               [](const std::vector<SemValue>& v) -> SemValue { return LogicalForm::count(form(v[0])); }});

  r.push_back({"$SET", {Symbol::nt("$TYPE")},
               [](const std::vector<SemValue>& v) -> SemValue { return LogicalForm::type(atom(v[0])); }});
  {
    auto rhs = words({"player", "whose"});
    rhs.push_back(Symbol::nt("$NUMATTR"));
    rhs.push_back(Symbol::t("is"));
    rhs.push_back(Symbol::nt("$CMP"));
    rhs.push_back(Symbol::nt("$NUM"));
    r.push_back({"$SET", rhs, [](const std::vector<SemValue>& v) -> SemValue {
                   return LogicalForm::filter(LogicalForm::type("player"), atom(v[0]), comparator(atom(v[1])),
                                              atom(v[2]));
                 }});
  }
  {
    auto rhs = words({"player", "whose", "position", "is"});
    rhs.push_back(Symbol::nt("$POS"));
    r.push_back({"$SET", rhs, [](const std::vector<SemValue>& v) -> SemValue {
                   return LogicalForm::filter(LogicalForm::type("player"), "position", Comparator::Eq, atom(v[0]));
                 }});
  }
  {
    auto rhs = words({"player", "that", "plays", "for"});
    rhs.push_back(Symbol::nt("$TEAM"));
    r.push_back({"$SET", rhs, [](const std::vector<SemValue>& v) -> SemValue {
                   return LogicalForm::filter(LogicalForm::type("player"), "plays_for", Comparator::Eq, atom(v[0]));
                 }});
  }
  {
    auto rhs = words({"player", "that", "has", "the"});
    rhs.push_back(Symbol::nt("$SUP"));
    rhs.push_back(Symbol::nt("$NUMATTR"));
    r.push_back({"$SET", rhs, [](const std::vector<SemValue>& v) -> SemValue {
                   return LogicalForm::superlative(atom(v[1]), atom(v[0]) == "max", LogicalForm::type("player"));
                 }});
  }
  {
    auto rhs = words({"player", "whose", "position", "is"});
    rhs.push_back(Symbol::nt("$POS"));
    for (const char* w : {"and", "that", "plays", "for"}) rhs.push_back(Symbol::t(w));
    rhs.push_back(Symbol::nt("$TEAM"));
    r.push_back({"$SET", rhs, [](const std::vector<SemValue>& v) -> SemValue {
                   return LogicalForm::conj(
                       LogicalForm::filter(LogicalForm::type("player"), "position", Comparator::Eq, atom(v[0])),
                       LogicalForm::filter(LogicalForm::type("player"), "plays_for", Comparator::Eq, atom(v[1])));
                 }});
  }

  r.push_back(lexeme("$TYPE", {"player"}, "player"));
  r.push_back(lexeme("$TYPE", {"team"}, "team"));
  r.push_back(lexeme("$NUMATTR", {"number", "of", "steals"}, "num_steals"));
  r.push_back(lexeme("$NUMATTR", {"number", "of", "points"}, "num_points"));
  r.push_back(lexeme("$NUMATTR", {"number", "of", "assists"}, "num_assists"));
  r.push_back(lexeme("$NUMATTR", {"number", "of", "rebounds"}, "num_rebounds"));
  r.push_back(lexeme("$CMP", {"at", "least"}, ">="));
  r.push_back(lexeme("$CMP", {"at", "most"}, "<="));
  r.push_back(lexeme("$CMP", {"equal", "to"}, "="));
  for (const char* n : {"1", "2", "3", "5", "8", "12"}) r.push_back(lexeme("$NUM", {n}, n));
  r.push_back(lexeme("$SUP", {"largest"}, "max"));
  r.push_back(lexeme("$SUP", {"smallest"}, "min"));
  for (const char* p : {"guard", "forward", "center"}) r.push_back(lexeme("$POS", {p}, p));
  for (const char* t : {"lakers", "celtics", "bulls", "heat"}) r.push_back(lexeme("$TEAM", {t}, t));
  return g;
}

}  // namespace dpp
