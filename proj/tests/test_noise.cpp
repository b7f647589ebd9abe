#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "dpp/error.hpp"
#include "dpp/noise/noise.hpp"
#include "oracles.hpp"

using namespace dpp;
using dpp::testing::weighted_vocab;

namespace {

std::vector<std::vector<std::string>> chunks(const std::vector<std::string>& t, int n) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < t.size(); i += static_cast<std::size_t>(n))
    out.emplace_back(t.begin() + static_cast<std::ptrdiff_t>(i),
                     t.begin() + static_cast<std::ptrdiff_t>(std::min(t.size(), i + static_cast<std::size_t>(n))));
  return out;
}

}  // namespace

TEST_CASE("drop probabilities follow min(p_max, w / sum w) within 3 sigma") {
  const std::map<std::string, int> counts{{"a", 50}, {"b", 20}, {"c", 10}, {"d", 10}, {"e", 5}, {"f", 5}};
  const Vocab v = weighted_vocab(counts);
  const auto u = Utterance::from_text("a b c d e f", UtteranceKind::Natural);
  for (double p_max : {0.2, 0.15}) {
    std::mt19937_64 rng(17);
    const int trials = 100000;
    std::map<std::string, int> dropped;
    for (int i = 0; i < trials; ++i) {
      const auto out = drop_words(u, v, p_max, rng);
      for (const auto& t : u.tokens())
        if (std::find(out.tokens().begin(), out.tokens().end(), t) == out.tokens().end()) ++dropped[t];
    }
    for (const auto& [t, w] : counts) {
      const double p = std::min(p_max, w / 100.0);
      const double sigma = std::sqrt(p * (1 - p) / trials);
      CHECK(std::abs(dropped[t] / double(trials) - p) <= 3 * sigma);
    }
  }
}

TEST_CASE("dropping never empties an utterance") {
  const Vocab v = weighted_vocab({{"x", 1}});
  const auto u = Utterance::from_text("x", UtteranceKind::Natural);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(drop_words(u, v, 1.0, rng).size() == 1);
}

TEST_CASE("bigram shuffle permutes left-to-right chunks") {
  std::mt19937_64 rng(4);
  const auto u = Utterance::from_text("a b c d e f g", UtteranceKind::Canonical);
  auto parts = chunks(u.tokens(), 2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto out = shuffle_ngrams(u, 2, rng).tokens();
    std::sort(parts.begin(), parts.end());
    bool found = false;
    do {
      std::vector<std::string> joined;
      for (const auto& c : parts) joined.insert(joined.end(), c.begin(), c.end());
      found = found || joined == out;
    } while (std::next_permutation(parts.begin(), parts.end()));
    CHECK(found);
  }
}

TEST_CASE("mixed-source addition keeps the original order and inserts source words") {
  std::mt19937_64 rng(8);
  const auto u = Utterance::from_text("p q r", UtteranceKind::Natural);
  const auto src = Utterance::from_text("s1 s2 s3 s4 s5 s6 s7 s8 s9 s10", UtteranceKind::Canonical);
  for (int trial = 0; trial < 100; ++trial) {
    const auto out = add_mixed(u, src, 0.1, 0.2, rng).tokens();
    const std::size_t k = out.size() - u.size();
    CHECK(k >= 1);
    CHECK(k <= 2);
    std::vector<std::string> kept;
    for (const auto& t : out)
      if (t.size() == 1) kept.push_back(t);
    CHECK(kept == u.tokens());
  }
}

TEST_CASE("candidate selection returns the nearest sampled candidate") {
  std::vector<Utterance> pool;
  for (int i = 0; i < 6; ++i) pool.push_back(Utterance::from_text("w" + std::to_string(i), UtteranceKind::Canonical));
  const auto u = Utterance::from_text("q", UtteranceKind::Natural);
  std::mt19937_64 rng(3);
  // Every candidate sampled: global minimum wins.
  CandidateDistance dist = [](const Utterance&, std::size_t i) { return std::abs(static_cast<double>(i) - 3.5); };
  CHECK(select_candidate_index(u, pool, 50, dist, rng) == 3);
  // Constant distance: the earliest sampled candidate, which with C = 1 is the only one.
  CandidateDistance flat = [](const Utterance&, std::size_t) { return 1.0; };
  std::mt19937_64 r1(5), r2(5);
  CHECK(select_candidate_index(u, pool, 1, flat, r1) == select_candidate_index(u, pool, 1, flat, r2));
  CHECK_THROWS_AS(select_candidate_index(u, {}, 3, flat, rng), ConfigError);
}

TEST_CASE("noise spec validation and labels") {
  NoiseSpec s;
  CHECK(s.label() == "drop+add+shuffle");
  s.add = false;
  CHECK(s.label() == "drop+shuffle");
  s.drop = s.shuffle = false;
  CHECK(s.label() == "none");
  NoiseSpec bad;
  bad.p_max = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = NoiseSpec{};
  bad.candidates = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("corrupt with every channel off is the identity") {
  NoiseSpec s;
  s.drop = s.add = s.shuffle = false;
  const Vocab v = weighted_vocab({{"a", 1}, {"b", 1}});
  const auto u = Utterance::from_text("a b", UtteranceKind::Natural);
  std::mt19937_64 rng(1);
  CandidateDistance d = [](const Utterance&, std::size_t) { return 0.0; };
  CHECK(corrupt(u, s, v, {}, d, rng) == u);
}
