#include "dpp/domain/corpora.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "dpp/error.hpp"

namespace dpp {

std::size_t eval_split_size(std::size_t n, double eval_fraction) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
    throw ConfigError("eval_fraction must lie in (0, 1)");
  const auto k = static_cast<std::size_t>(std::floor(eval_fraction * static_cast<double>(n)));
  const std::size_t count = std::max<std::size_t>(1, k);
  if (n == 0 || count >= n)
    throw ConfigError("eval_fraction " + std::to_string(eval_fraction) + " leaves no training pairs out of " +
                      std::to_string(n));
  return count;
}

namespace {

std::vector<Utterance> paraphrases(const Utterance& canonical, const RewriteRules& rules, int wanted,
                                   std::mt19937_64& rng) {
  std::vector<Utterance> out;
  std::set<std::string> seen;
  for (int attempt = 0; attempt < 4 * wanted && static_cast<int>(out.size()) < wanted; ++attempt) {
    Utterance u = naturalize(canonical, rules, rng);
    if (seen.insert(u.text()).second) out.push_back(std::move(u));
  }
  return out;
}

}  // namespace

Corpora build_corpora(const std::vector<CanonicalPair>& pairs, const RewriteRules& rules,
                      const CorpusOptions& options) {
  if (options.paraphrases_per_canonical < 1) throw ConfigError("paraphrases_per_canonical must be >= 1");
  const std::size_t n_eval = eval_split_size(pairs.size(), options.eval_fraction);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> eval_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_eval));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_eval), order.end());
  std::sort(eval_idx.begin(), eval_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  Corpora c;
  std::set<std::string> eval_texts;
  for (std::size_t i : eval_idx) {
    const auto& p = pairs[i];
    c.eval_pairs.push_back(p);
    eval_texts.insert(p.canonical.text());
    for (auto& x : paraphrases(p.canonical, rules, options.paraphrases_per_canonical, rng)) {
      eval_texts.insert(x.text());
      c.eval.push_back({std::move(x), p.canonical, p.lf});
    }
  }
  for (std::size_t i : train_idx) {
    const auto& p = pairs[i];
    c.train_pairs.push_back(p);
    if (!eval_texts.count(p.canonical.text())) c.canonical.push_back(p.canonical);
    for (auto& x : paraphrases(p.canonical, rules, options.paraphrases_per_canonical, rng)) {
      if (eval_texts.count(x.text())) continue;
      c.semi_pool.push_back({x, p.canonical, p.lf});
      c.natural.push_back(std::move(x));
    }
  }
  // Discard the alignment between X and Z.
  std::shuffle(c.natural.begin(), c.natural.end(), rng);
  std::shuffle(c.canonical.begin(), c.canonical.end(), rng);
  return c;
}

void write_jsonl(const std::string& path, const std::vector<CorpusRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["kind"] = r.kind;
    j["tokens"] = r.tokens;
    if (r.natural) j["natural"] = *r.natural;
    if (r.lf) j["lf"] = *r.lf;
    if (r.denotation) j["denotation"] = *r.denotation;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<CorpusRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file: " + path);
  std::vector<CorpusRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CorpusRecord r;
      r.kind = j.at("kind").get<std::string>();
      r.tokens = j.at("tokens").get<std::string>();
      if (r.kind != "natural" && r.kind != "canonical" && r.kind != "pair")
        throw ConfigError("unknown record kind '" + r.kind + "'");
      if (j.contains("lf")) r.lf = j["lf"].get<std::string>();
      if (j.contains("natural")) r.natural = j["natural"].get<std::string>();
      if (j.contains("denotation")) r.denotation = j["denotation"].get<std::string>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<CorpusRecord> to_records(const std::vector<Utterance>& utterances) {
  std::vector<CorpusRecord> out;
  for (const auto& u : utterances) out.push_back({std::string(to_string(u.kind())), u.text(), {}, {}, {}});
  return out;
}

std::vector<CorpusRecord> to_records(const std::vector<GoldPair>& pairs, const Database* db) {
  std::vector<CorpusRecord> out;
  for (const auto& p : pairs) {
    CorpusRecord r{"pair", p.canonical.text(), p.lf.serialize(), p.natural.text(), {}};
    if (db) r.denotation = execute(p.lf, *db).to_string();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CorpusRecord> to_records(const std::vector<CanonicalPair>& pairs, const Database* db) {
  std::vector<CorpusRecord> out;
  for (const auto& p : pairs) {
    CorpusRecord r{"pair", p.canonical.text(), p.lf.serialize(), {}, {}};
    if (db) r.denotation = execute(p.lf, *db).to_string();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Utterance> utterances_from(const std::vector<CorpusRecord>& records, UtteranceKind kind) {
  std::vector<Utterance> out;
  const std::string want(to_string(kind));
  for (const auto& r : records)
    if (r.kind == want) out.push_back(Utterance::from_text(r.tokens, kind));
  return out;
}

std::vector<GoldPair> gold_pairs_from(const std::vector<CorpusRecord>& records) {
  std::vector<GoldPair> out;
  for (const auto& r : records) {
    if (r.kind != "pair" || !r.natural || !r.lf) continue;
    out.push_back({Utterance::from_text(*r.natural, UtteranceKind::Natural),
                   Utterance::from_text(r.tokens, UtteranceKind::Canonical), LogicalForm::parse(*r.lf)});
  }
  return out;
}

std::vector<CanonicalPair> canonical_pairs_from(const std::vector<CorpusRecord>& records) {
  std::vector<CanonicalPair> out;
  for (const auto& r : records) {
    if (r.kind != "pair" || !r.lf) continue;
    out.push_back({Utterance::from_text(r.tokens, UtteranceKind::Canonical), LogicalForm::parse(*r.lf)});
  }
  return out;
}

}  // namespace dpp
