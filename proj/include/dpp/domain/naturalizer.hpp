#pragma once

#include <random>
#include <string>
#include <vector>

#include "dpp/textstats/utterance.hpp"

namespace dpp {

/// Phrase rewrite: `pattern` tokens are matched literally except "*1".."*9",
/// which capture one token each and may be reused in the replacement. A
/// leading "^" anchors the pattern at the start of the utterance (an
/// anchored empty pattern inserts a prefix).
struct RewriteRule {
  std::string family;  // synonym | function_word | reorder
  std::vector<std::string> pattern;
  std::vector<std::vector<std::string>> alternatives;
};

using RewriteRules = std::vector<RewriteRule>;

// Bundled rules for the basketball grammar.
RewriteRules basketball_rewrites();

// Applies 1-3 rewrites chosen uniformly among the rules matching at the time
// of application. Identity when nothing matches or `rules` is empty.
Utterance naturalize(const Utterance& canonical, const RewriteRules& rules, std::mt19937_64& rng);

}  // namespace dpp
