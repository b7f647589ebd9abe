#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dpp/error.hpp"
#include "dpp/textstats/bleu.hpp"
#include "dpp/textstats/embedding.hpp"
#include "dpp/textstats/vocab.hpp"
#include "dpp/textstats/wmd.hpp"
#include "oracles.hpp"

using namespace dpp;

using dpp::testing::brute_wmd;
using dpp::testing::euclid;

TEST_CASE("bleu matches hand-computed values") {
  // p1 = 5/6, p2 = 3/5, p3 = 1/4, p4 smoothed to 1/4, no brevity penalty.
  const auto c = tokenize("the cat sat on the mat");
  const auto r = tokenize("the cat is on the mat");
  CHECK(bleu(c, r) == doctest::Approx(std::pow(2.0, -1.25)).epsilon(1e-12));
  // Every precision is 1 (higher orders smoothed 1/1); brevity penalty e^(1 - 6/2).
  CHECK(bleu(tokenize("the cat"), r) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(bleu(r, r) == doctest::Approx(1.0));
  CHECK(bleu(tokenize("dog"), r) == 0.0);
  // Clipping: p1 = 1/3, p2 = (0+1)/(2+1), p3 = (0+1)/(1+1), p4 = 1/1.
  CHECK(bleu(tokenize("the the the"), tokenize("the cat")) ==
        doctest::Approx(std::pow((1.0 / 3.0) * (1.0 / 3.0) * 0.5 * 1.0, 0.25)).epsilon(1e-12));
}

TEST_CASE("wmd exact solver agrees with brute-force assignment") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "g", "h"};
  const auto emb = EmbeddingTable::random(words, 5, rng);
  std::uniform_int_distribution<int> len(1, 6), pick(0, 7);
  for (int trial = 0; trial < 150; ++trial) {
    std::vector<std::string> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
    for (auto& t : a) t = words[static_cast<std::size_t>(pick(rng))];
    for (auto& t : b) t = words[static_cast<std::size_t>(pick(rng))];
    const double exact = wmd(a, b, emb);
    CHECK(std::abs(exact - brute_wmd(a, b, emb)) <= 1e-9);
    CHECK(relaxed_wmd(a, b, emb) <= exact + 1e-12);
    CHECK(std::abs(exact - wmd(b, a, emb)) <= 1e-9);
  }
}

TEST_CASE("wmd basic properties") {
  std::mt19937_64 rng(2);
  const auto emb = EmbeddingTable::random({"x", "y", "z"}, 4, rng);
  CHECK(wmd(tokenize("x y"), tokenize("y x"), emb) == doctest::Approx(0.0));
  CHECK(wmd(tokenize("x"), tokenize("y"), emb) == doctest::Approx(euclid(emb, "x", "y")));
  CHECK_THROWS(wmd(std::vector<std::string>{}, tokenize("x"), emb));
}

TEST_CASE("vocab reserves ids and decodes up to the end marker") {
  const std::vector<Utterance> corpus{Utterance::from_text("b a a", UtteranceKind::Natural)};
  const Vocab v = Vocab::build(corpus);
  CHECK(v.id("<pad>") == Vocab::kPad);
  CHECK(v.id("<s>") == Vocab::kBos);
  CHECK(v.id("</s>") == Vocab::kEos);
  CHECK(v.id("never seen") == Vocab::kUnk);
  CHECK(v.count("a") == 2);
  const int a = v.id("a");
  const int b = v.id("b");
  const std::vector<int> ids{Vocab::kBos, a, Vocab::kPad, b, Vocab::kEos, a};
  CHECK(v.decode(ids) == std::vector<std::string>{"a", "b"});
  CHECK(v.fingerprint() == Vocab::build(corpus).fingerprint());
  CHECK_THROWS_AS(Vocab::build(std::vector<Utterance>{}), ConfigError);
}

TEST_CASE("utterances reject empty text") {
  CHECK_THROWS(Utterance::from_text("   ", UtteranceKind::Canonical));
  CHECK(Utterance::from_text(" a  b ", UtteranceKind::Canonical).tokens() == std::vector<std::string>{"a", "b"});
}
