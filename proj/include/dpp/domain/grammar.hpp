#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "dpp/domain/logical_form.hpp"
#include "dpp/textstats/utterance.hpp"

namespace dpp {

// Semantic value of a derivation: a logical form, or an atom (attribute name,
// comparator, literal) produced by lexical rules.
using SemValue = std::variant<LogicalForm, std::string>;

struct Symbol {
  std::string name;
  bool nonterminal = false;

  static Symbol t(std::string word) { return {std::move(word), false}; }
  static Symbol nt(std::string name) { return {std::move(name), true}; }
};

/// lhs -> rhs with a semantic action applied to the values of the rhs
/// nonterminals (in order). A rule without an action passes its single
/// nonterminal child through, or yields its terminal text as an atom.
struct GrammarRule {
  std::string lhs;
  std::vector<Symbol> rhs;
  std::function<SemValue(const std::vector<SemValue>&)> action;
};

struct Grammar {
  std::string start;
  std::vector<GrammarRule> rules;

  // Throws ConfigError naming the first nonterminal that has no rules or is
  // not reachable from the start symbol.
  void validate() const;
};

struct CanonicalPair {
  Utterance canonical;
  LogicalForm lf;
};

// Every distinct derivation whose tree height (terminals 0, each rule
// application +1) is at most depth_bound, sorted by serialized logical form.
// Throws ConfigError when one canonical utterance derives two logical forms.
std::vector<CanonicalPair> enumerate_pairs(const Grammar& grammar, int depth_bound);

// The bundled basketball grammar.
Grammar basketball_grammar();

// Depth bound at which the bundled grammar is fully expanded.
inline constexpr int kDefaultDepth = 3;

}  // namespace dpp
