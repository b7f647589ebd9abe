#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "dpp/error.hpp"
#include "dpp/eval/ablation.hpp"
#include "dpp/eval/baselines.hpp"
#include "dpp/textstats/wmd.hpp"
#include "fixtures.hpp"

using namespace dpp;
using dpp::testing::snapshot;
using dpp::testing::tiny_config;
using dpp::testing::tiny_workspace;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dpp_test_eval_" + name);
  fs::remove_all(p);
  return p;
}

GoldPair gold(const std::string& natural, const std::string& canonical, const std::string& lf) {
  return {Utterance::from_text(natural, UtteranceKind::Natural), Utterance::from_text(canonical, UtteranceKind::Canonical),
          LogicalForm::parse(lf_tokenize(lf))};
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("oracle pipeline scores one and gibberish scores zero") {
  const Workspace ws = prepare_workspace(tiny_config(), "");
  std::map<std::string, std::vector<std::string>> lf_of;
  std::map<std::string, std::vector<std::string>> canon_of;
  for (const auto& g : ws.corpora.eval) {
    lf_of[g.canonical.text()] = g.lf.tokens();
    canon_of[g.natural.text()] = g.canonical.tokens();
  }
  const Canonicalizer oracle = [&](const Utterance& x) { return canon_of.at(x.text()); };
  const LfParser oracle_parse = [&](const std::vector<std::string>& z) { return lf_of.at(join(z)); };
  const auto good = evaluate_pipeline(oracle, oracle_parse, ws.db, ws.corpora.eval, "oracle");
  CHECK(good.accuracy == 1.0);
  CHECK(good.examples.size() == ws.corpora.eval.size());

  const LfParser junk = [](const std::vector<std::string>&) { return std::vector<std::string>{"(", "count", "("}; };
  const auto bad = evaluate_pipeline(oracle, junk, ws.db, ws.corpora.eval, "junk");
  CHECK(bad.accuracy == 0.0);
  for (const auto& e : bad.examples) CHECK_FALSE(e.match);

  const Canonicalizer silent = [](const Utterance&) { return std::vector<std::string>{}; };
  CHECK(evaluate_pipeline(silent, oracle_parse, ws.db, {}, "empty").accuracy == 0.0);
}

TEST_CASE("denotation-level scoring accepts equivalent logical forms") {
  const Database db = Database::basketball();
  const auto g = gold("lakers players", "player that plays for lakers", "(filter (type player) (= plays_for lakers))");
  const auto same = score_prediction(
      g, "", lf_tokenize("(and (filter (type player) (= plays_for lakers)) (type player))"), db);
  CHECK(same.match);
  const auto count = score_prediction(g, "", lf_tokenize("(count (filter (type player) (= plays_for lakers)))"), db);
  CHECK_FALSE(count.match);
  const auto broken = score_prediction(g, "", lf_tokenize("(filter (type player)"), db);
  CHECK_FALSE(broken.match);
  const auto bad_attr = score_prediction(g, "", lf_tokenize("(filter (type team) (= plays_for lakers))"), db);
  CHECK_FALSE(bad_attr.match);
  CHECK(same.gold_denotation == execute(g.lf, db).to_string());
}

TEST_CASE("accuracy equals a recount of the match flags") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EvalExample> ex(static_cast<std::size_t>(1 + trial));
    std::size_t n = 0;
    for (auto& e : ex) n += (e.match = coin(rng)) ? 1 : 0;
    const auto r = tally("s", ex);
    CHECK(r.matches() == n);
    CHECK(r.accuracy == doctest::Approx(static_cast<double>(n) / static_cast<double>(ex.size())));
  }
  CHECK(tally("s", {}).accuracy == 0.0);
}

TEST_CASE("evaluation reads the models without changing them") {
  Workspace ws = tiny_workspace();
  ModelSet m = fresh_models(ws);
  m.para.max_len = 8;
  m.nsp.max_len = 16;
  const std::vector<GoldPair> eval(ws.corpora.eval.begin(), ws.corpora.eval.begin() + 4);
  CHECK_THROWS_AS(evaluate(m, ws.db, eval, 2), std::logic_error);
  m.nsp.frozen = true;
  const auto before = snapshot(m.para);
  const auto nsp_before = snapshot(m.nsp);
  const auto a = evaluate(m, ws.db, eval, 2, "fp");
  const auto b = evaluate(m, ws.db, eval, 2, "fp");
  CHECK(snapshot(m.para) == before);
  CHECK(snapshot(m.nsp) == nsp_before);
  CHECK(a.examples.size() == 4);
  CHECK(a.fingerprint == "fp");
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.examples[i].input == eval[i].natural.text());
    CHECK(a.examples[i].predicted_canonical == b.examples[i].predicted_canonical);
    CHECK(a.examples[i].gold_denotation == execute(eval[i].lf, ws.db).to_string());
  }
  // Top-1 of the beam is the canonical utterance that gets parsed.
  const auto z = paraphrase(m, eval[0].natural, Direction::ToCanonical, DecodeMode::Beam, 2).tokens;
  CHECK(a.examples[0].predicted_canonical == join(z));
  CHECK(a.examples[0].predicted_lf == parse_canonical(m, z, ws.db).lf_text);
}

TEST_CASE("reports round trip through JSONL") {
  const auto r = tally("sys", {{"a b", "c", "(type team)", "{}", "{}", true}, {"d", "", "", "error", "{}", false}}, "abc");
  const auto dir = scratch("report");
  fs::create_directories(dir);
  write_report(r, (dir / "r.jsonl").string(), (dir / "r.txt").string());
  const auto lines = lines_of(dir / "r.jsonl");
  REQUIRE(lines.size() == 3);
  const auto first = nlohmann::json::parse(lines[0]);
  CHECK(first["input"] == "a b");
  CHECK(first["match"] == true);
  const auto summary = nlohmann::json::parse(lines[2]);
  CHECK(summary["summary"] == "sys");
  CHECK(summary["accuracy"] == 0.5);
  CHECK(summary["total"] == 2);
  CHECK(summary["fingerprint"] == "abc");
  CHECK(render_summary({r}).find("sys") != std::string::npos);
  CHECK(fs::file_size(dir / "r.txt") > 0);
}

TEST_CASE("case dumps use typed tokens in fixed blocks") {
  const Database db = Database::basketball();
  CHECK(typed_tokens({"players", "of", "lakers"}, db) == std::vector<std::string>{"players", "of", "_team_"});
  Workspace ws = tiny_workspace();
  ModelSet m = fresh_models(ws);
  m.para.max_len = 6;
  m.nsp.max_len = 10;
  const auto dir = scratch("cases");
  fs::create_directories(dir);
  const std::vector<Utterance> inputs(ws.data.natural.begin(), ws.data.natural.begin() + 3);
  dump_cases(m, ws.db, inputs, (dir / "cases.txt").string());
  const auto lines = lines_of(dir / "cases.txt");
  REQUIRE(lines.size() >= 14);
  const std::vector<std::string> keys{"input: ", "canonical: ", "lf: ", "denotation: "};
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t k = 0; k < 4; ++k) CHECK(lines[b * 5 + k].rfind(keys[k], 0) == 0);
    if (b < 2) CHECK(lines[b * 5 + 4].empty());
  }
  CHECK(lines[0] == "input: " + join(typed_tokens(inputs[0].tokens(), ws.db)));
  CHECK_THROWS(dump_cases(m, ws.db, inputs, (dir / "missing" / "x.txt").string()));
}

TEST_CASE("pruned nearest-neighbour search agrees with brute force") {
  const Workspace ws = tiny_workspace();
  std::vector<Utterance> cands(ws.data.canonical.begin(), ws.data.canonical.begin() + 12);
  cands.push_back(cands[3]);  // exact duplicate: the earlier index must win
  const std::vector<Utterance> queries(ws.data.natural.begin(), ws.data.natural.begin() + 10);
  const auto got = nearest_by_wmd(queries, cands, ws.emb);
  REQUIRE(got.size() == queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::size_t best = 0;
    double bd = wmd(queries[q], cands[0], ws.emb);
    for (std::size_t c = 1; c < cands.size(); ++c) {
      const double d = wmd(queries[q], cands[c], ws.emb);
      if (d < bd - 1e-12) {
        best = c;
        bd = d;
      }
    }
    CHECK(got[q] == best);
  }
  CHECK(nearest_by_wmd({cands[3]}, cands, ws.emb).front() == 3);
}

TEST_CASE("ablation rows cover each axis and share a base configuration") {
  const TrainConfig base;
  const std::map<AblationAxis, std::size_t> expected{
      {AblationAxis::NoiseSubsets, 8}, {AblationAxis::CycleTasks, 7}, {AblationAxis::SharedEncoder, 2}};
  for (const auto& [axis, n] : expected) {
    const auto rows = ablation_configs(axis, base);
    CHECK(rows.size() == n);
    std::set<std::string> labels;
    for (const auto& [label, cfg] : rows) labels.insert(label);
    CHECK(labels.size() == n);
    CHECK(parse_axis(to_string(axis)) == axis);
  }
  const auto noise = ablation_configs(AblationAxis::NoiseSubsets, base);
  CHECK(noise.front().first == "none");
  CHECK(noise.back().first == "drop+add+shuffle");
  const auto cycle = ablation_configs(AblationAxis::CycleTasks, base);
  CHECK(cycle.back().second.cycle_tasks == (kTaskDae | kTaskBt | kTaskDrl));
  CHECK_THROWS_AS(parse_axis("dropout"), ConfigError);
}

TEST_CASE("ablation runs every row from the same prepared models") {
  TrainConfig cfg = tiny_config();
  Workspace ws = tiny_workspace(cfg);
  ModelSet m = fresh_models(ws);
  pretrain_auxiliaries(m, ws.data, ws.cfg);
  const std::vector<GoldPair> eval(ws.corpora.eval.begin(), ws.corpora.eval.begin() + 4);
  const auto aux_before = snapshot(m.aux);
  const auto t = run_ablation(AblationAxis::SharedEncoder, ws.cfg, m, ws.data, ws.emb, ws.db, eval);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].base_fingerprint == t.rows[1].base_fingerprint);
  CHECK(t.rows[0].fingerprint != t.rows[1].fingerprint);
  for (const auto& r : t.rows) {
    CHECK(r.error.empty());
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
  }
  CHECK(snapshot(m.aux) == aux_before);
  const auto csv = t.to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("baselines produce complete reports") {
  TrainConfig cfg = tiny_config();
  Workspace ws = tiny_workspace(cfg);
  ModelSet m = fresh_models(ws);
  pretrain_auxiliaries(m, ws.data, ws.cfg);
  const auto para_before = snapshot(m.para);
  const std::vector<GoldPair> eval(ws.corpora.eval.begin(), ws.corpora.eval.begin() + 4);
  const std::vector<EvalReport> reports{
      wmd_samples_baseline(m, ws.data, ws.emb, ws.db, eval, WmdMode::TwoStage, ws.cfg),
      wmd_samples_baseline(m, ws.data, ws.emb, ws.db, eval, WmdMode::OneStage, ws.cfg),
      canonical_transfer_baseline(m, ws.data, ws.emb, ws.db, eval, false, ws.cfg),
      canonical_transfer_baseline(m, ws.data, ws.emb, ws.db, eval, true, ws.cfg)};
  std::set<std::string> systems;
  for (const auto& r : reports) {
    CHECK(r.examples.size() == 4);
    CHECK(r.accuracy == doctest::Approx(static_cast<double>(r.matches()) / 4.0));
    systems.insert(r.system);
  }
  CHECK(systems.size() == 4);
  CHECK(snapshot(m.para) == para_before);
}
