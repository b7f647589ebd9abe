#include <doctest.h>

#include <cstdio>
#include <set>

#include "dpp/domain/corpora.hpp"
#include "dpp/domain/grammar.hpp"
#include "dpp/domain/naturalizer.hpp"
#include "dpp/error.hpp"

using namespace dpp;

TEST_CASE("executor answers hand-checked queries on the fixture database") {
  const Database db = Database::basketball();
  auto run = [&](const char* text) { return execute(LogicalForm::parse(text), db); };
  CHECK(run("(count (filter (type player) (= plays_for lakers)))").number() == 4);
  CHECK(run("(count (filter (type player) (>= num_points 10)))").number() == 7);
  CHECK(run("(superlative num_steals max (type player))").set() == Denotation::EntitySet{"michael_jordan"});
  CHECK(run("(and (filter (type player) (= position center)) (filter (type player) (= plays_for heat)))").set() ==
        Denotation::EntitySet{"chris_bosh", "udonis_haslem"});
  CHECK(run("(count (type team))").number() == 4);
  CHECK(run("(filter (type player) (= no_such_attr 1))").is_error());
}

TEST_CASE("denotation comparison is set-based and errors never match") {
  const Denotation a(Denotation::EntitySet{"x", "y"});
  const Denotation b(Denotation::EntitySet{"x", "y"});
  const Denotation n(std::int64_t{2});
  const Denotation e(ExecError{"boom", ""});
  CHECK(a.matches(b));
  CHECK_FALSE(a.matches(n));
  CHECK_FALSE(e.matches(e));
  CHECK_FALSE(n.matches(e));
}

TEST_CASE("logical forms round-trip through text and tokens") {
  const Database db = Database::basketball();
  for (const auto& p : enumerate_pairs(basketball_grammar(), kDefaultDepth)) {
    CHECK(LogicalForm::parse(p.lf.serialize()) == p.lf);
    CHECK(LogicalForm::parse(p.lf.tokens()) == p.lf);
    CHECK_FALSE(execute(p.lf, db).is_error());
  }
  CHECK_FALSE(LogicalForm::try_parse(lf_tokenize("(count (type player)")).has_value());
  CHECK_THROWS(LogicalForm::parse("(count"));
}

TEST_CASE("grammar enumeration is deterministic and unambiguous") {
  const auto pairs = enumerate_pairs(basketball_grammar(), kDefaultDepth);
  CHECK(pairs.size() == 202);
  std::set<std::string> canon;
  for (const auto& p : pairs) canon.insert(p.canonical.text());
  CHECK(canon.size() == pairs.size());
  const auto again = enumerate_pairs(basketball_grammar(), kDefaultDepth);
  for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(pairs[i].canonical == again[i].canonical);
  CHECK(enumerate_pairs(basketball_grammar(), 1).size() < pairs.size());
}

TEST_CASE("grammar validation names the broken nonterminal") {
  Grammar g = basketball_grammar();
  g.rules.push_back(GrammarRule{g.start, {Symbol::nt("$MISSING")}, nullptr});
  try {
    g.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("$MISSING") != std::string::npos);
  }
}

TEST_CASE("eval split keeps at least one form and leaves training data") {
  CHECK(eval_split_size(202, 0.2) == 40);
  CHECK(eval_split_size(3, 0.1) == 1);
  CHECK_THROWS_AS(eval_split_size(1, 0.5), ConfigError);
  CHECK_THROWS_AS(eval_split_size(10, 1.0), ConfigError);
}

TEST_CASE("corpora keep evaluation disjoint from training") {
  CorpusOptions o;
  o.paraphrases_per_canonical = 3;
  o.seed = 5;
  const auto pairs = enumerate_pairs(basketball_grammar(), kDefaultDepth);
  const Corpora c = build_corpora(pairs, basketball_rewrites(), o);
  std::set<std::string> eval_lfs, eval_text;
  for (const auto& p : c.eval) {
    eval_lfs.insert(p.lf.serialize());
    eval_text.insert(p.natural.text());
  }
  for (const auto& p : c.train_pairs) CHECK(eval_lfs.count(p.lf.serialize()) == 0);
  for (const auto& x : c.natural) CHECK(eval_text.count(x.text()) == 0);
  CHECK(c.train_pairs.size() + c.eval_pairs.size() == pairs.size());
  for (const auto& x : c.natural) CHECK(x.kind() == UtteranceKind::Natural);
  // Same seed, same corpora.
  const Corpora again = build_corpora(pairs, basketball_rewrites(), o);
  CHECK(again.natural == c.natural);
}

TEST_CASE("naturalizer is seeded and identity without rules") {
  const auto z = Utterance::from_text("player that plays for lakers", UtteranceKind::Canonical);
  std::mt19937_64 a(9), b(9);
  CHECK(naturalize(z, basketball_rewrites(), a) == naturalize(z, basketball_rewrites(), b));
  std::mt19937_64 c(1);
  CHECK(naturalize(z, {}, c).tokens() == z.tokens());
}

TEST_CASE("corpus records round-trip through jsonl") {
  const std::string path = "test_domain_records.jsonl";
  const Database db = Database::basketball();
  const auto pairs = enumerate_pairs(basketball_grammar(), kDefaultDepth);
  const std::vector<CanonicalPair> few(pairs.begin(), pairs.begin() + 5);
  write_jsonl(path, to_records(few, &db));
  const auto back = canonical_pairs_from(read_jsonl(path));
  REQUIRE(back.size() == few.size());
  for (std::size_t i = 0; i < few.size(); ++i) {
    CHECK(back[i].canonical == few[i].canonical);
    CHECK(back[i].lf == few[i].lf);
  }
  std::remove(path.c_str());
}
