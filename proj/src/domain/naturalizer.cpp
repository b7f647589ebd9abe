#include "dpp/domain/naturalizer.hpp"

#include <optional>

namespace dpp {

namespace {

std::vector<std::string> split(const char* s) { return tokenize(s); }

RewriteRule rule(const char* family, const char* pattern, std::initializer_list<const char*> alts) {
  RewriteRule r{family, split(pattern), {}};
  for (const char* a : alts) r.alternatives.push_back(split(a));
  return r;
}

bool is_slot(const std::string& t) { return t.size() == 2 && t[0] == '*' && t[1] >= '1' && t[1] <= '9'; }

struct Match {
  std::size_t begin;
  std::size_t end;
  std::vector<std::string> captures;  // index = slot digit - 1
};

std::optional<Match> match_at(const std::vector<std::string>& toks, const std::vector<std::string>& pat,
                              std::size_t pos) {
  Match m{pos, pos, std::vector<std::string>(9)};
  std::size_t i = pos;
  for (const auto& p : pat) {
    if (i >= toks.size()) return std::nullopt;
    if (is_slot(p)) {
      m.captures[static_cast<std::size_t>(p[1] - '1')] = toks[i];
    } else if (p != toks[i]) {
      return std::nullopt;
    }
    ++i;
  }
  m.end = i;
  return m;
}

std::vector<Match> find_matches(const std::vector<std::string>& toks, const RewriteRule& r) {
  std::vector<Match> out;
  if (!r.pattern.empty() && r.pattern.front() == "^") {
    std::vector<std::string> rest(r.pattern.begin() + 1, r.pattern.end());
    if (auto m = match_at(toks, rest, 0)) out.push_back(*m);
    return out;
  }
  for (std::size_t pos = 0; pos < toks.size(); ++pos)
    if (auto m = match_at(toks, r.pattern, pos)) out.push_back(*m);
  return out;
}

}  // namespace

RewriteRules basketball_rewrites() {
  return {
      rule("synonym", "at least *1", {"*1 or more", "no less than *1", "*1 or above"}),
      rule("synonym", "at most *1", {"*1 or fewer", "no more than *1", "*1 or less"}),
      rule("synonym", "equal to *1", {"exactly *1", "precisely *1"}),
      rule("synonym", "number of steals", {"steals", "total steals"}),
      rule("synonym", "number of points", {"points", "scoring"}),
      rule("synonym", "number of assists", {"assists", "total assists"}),
      rule("synonym", "number of rebounds", {"rebounds", "boards"}),
      rule("synonym", "largest", {"most", "highest"}),
      rule("synonym", "smallest", {"fewest", "lowest"}),
      rule("synonym", "player", {"players", "athletes"}),
      rule("synonym", "team", {"teams", "squads"}),
      rule("synonym", "^ number of", {"how many", "count the"}),
      rule("function_word", "^", {"show me", "list", "what are the", "find"}),
      rule("function_word", "whose", {"with", "having"}),
      rule("function_word", "that", {"who"}),
      rule("function_word", "is", {"being"}),
      rule("reorder", "player whose number of *1 is *2 *3 *4", {"who has gotten *2 *3 *4 *1", "players with *2 *3 *4 *1"}),
      rule("reorder", "player that plays for *1", {"*1 players", "players on the *1"}),
      rule("reorder", "player whose position is *1", {"*1 players", "who plays *1"}),
      rule("reorder", "player that has the *1 number of *2", {"who has the *1 *2", "which player has the *1 *2"}),
  };
}

Utterance naturalize(const Utterance& canonical, const RewriteRules& rules, std::mt19937_64& rng) {
  std::vector<std::string> toks = canonical.tokens();
  if (rules.empty()) return Utterance(toks, UtteranceKind::Natural);
  const int steps = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int s = 0; s < steps; ++s) {
    std::vector<std::pair<const RewriteRule*, Match>> candidates;
    for (const auto& r : rules)
      for (auto& m : find_matches(toks, r)) candidates.emplace_back(&r, std::move(m));
    if (candidates.empty()) break;
    const auto& [r, m] =
        candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
    const auto& alt = r->alternatives[std::uniform_int_distribution<std::size_t>(0, r->alternatives.size() - 1)(rng)];
    std::vector<std::string> replacement;
    for (const auto& t : alt) replacement.push_back(is_slot(t) ? m.captures[static_cast<std::size_t>(t[1] - '1')] : t);
    std::vector<std::string> next(toks.begin(), toks.begin() + static_cast<std::ptrdiff_t>(m.begin));
    next.insert(next.end(), replacement.begin(), replacement.end());
    next.insert(next.end(), toks.begin() + static_cast<std::ptrdiff_t>(m.end), toks.end());
    if (!next.empty()) toks = std::move(next);
  }
  return Utterance(toks, UtteranceKind::Natural);
}

}  // namespace dpp
