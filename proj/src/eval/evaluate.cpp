#include "dpp/eval/evaluate.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dpp {

std::size_t EvalReport::matches() const {
  std::size_t n = 0;
  for (const auto& e : examples) n += e.match ? 1 : 0;
  return n;
}

EvalReport tally(std::string system, std::vector<EvalExample> examples, std::string fingerprint) {
  EvalReport r;
  r.system = std::move(system);
  r.examples = std::move(examples);
  r.fingerprint = std::move(fingerprint);
  r.accuracy = r.examples.empty() ? 0.0 : static_cast<double>(r.matches()) / static_cast<double>(r.examples.size());
  return r;
}

EvalExample score_prediction(const GoldPair& gold, const std::string& canonical,
                             const std::vector<std::string>& predicted_lf_tokens, const Database& db) {
  EvalExample e;
  e.input = gold.natural.text();
  e.predicted_canonical = canonical;
  e.predicted_lf = join(predicted_lf_tokens);
  const Denotation want = execute(gold.lf, db);
  e.gold_denotation = want.to_string();
  const auto lf = LogicalForm::try_parse(predicted_lf_tokens);
  if (!lf) {
    e.predicted_denotation = "error: parse failure";
    return e;
  }
  const Denotation got = execute(*lf, db);
  e.predicted_denotation = got.to_string();
  e.match = got.matches(want);
  return e;
}

EvalReport evaluate_pipeline(const Canonicalizer& canonicalize, const LfParser& parse, const Database& db,
                             const std::vector<GoldPair>& eval, const std::string& system) {
  std::vector<EvalExample> out;
  out.reserve(eval.size());
  for (const auto& p : eval) {
    const auto z = canonicalize(p.natural);
    out.push_back(score_prediction(p, join(z), parse(z), db));
  }
  return tally(system, std::move(out));
}

EvalReport evaluate_with(const Canonicalizer& canonicalize, ModelSet& m, const Database& db,
                         const std::vector<GoldPair>& eval, const std::string& system) {
  std::vector<std::vector<std::string>> zs;
  zs.reserve(eval.size());
  for (const auto& p : eval) zs.push_back(canonicalize(p.natural));
  const auto parses = parse_canonical_batch(m, zs, db);
  std::vector<EvalExample> out;
  out.reserve(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i)
    out.push_back(score_prediction(eval[i], join(zs[i]), tokenize(parses[i].lf_text), db));
  return tally(system, std::move(out));
}

EvalReport evaluate(ModelSet& m, const Database& db, const std::vector<GoldPair>& eval, int beam,
                    const std::string& fingerprint) {
  if (!m.nsp.frozen) throw std::logic_error("evaluate: the naive parser must be frozen");
  if (beam < 1) throw std::invalid_argument("evaluate: beam must be positive");
  auto r = evaluate_with(
      [&](const Utterance& x) { return paraphrase(m, x, Direction::ToCanonical, DecodeMode::Beam, beam).tokens; }, m,
      db, eval, "dpp");
  r.fingerprint = fingerprint;
  return r;
}

void write_report(const EvalReport& r, const std::string& jsonl_path, const std::string& summary_path) {
  std::ofstream out(jsonl_path);
  if (!out) throw std::runtime_error(jsonl_path + ": cannot open for writing");
  for (const auto& e : r.examples) {
    nlohmann::ordered_json j;
    j["input"] = e.input;
    j["canonical"] = e.predicted_canonical;
    j["lf"] = e.predicted_lf;
    j["denotation"] = e.predicted_denotation;
    j["gold_denotation"] = e.gold_denotation;
    j["match"] = e.match;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json s;
  s["summary"] = r.system;
  s["accuracy"] = r.accuracy;
  s["matches"] = r.matches();
  s["total"] = r.examples.size();
  s["fingerprint"] = r.fingerprint;
  s["beam_tie_rule"] = r.beam_tie_rule;
  out << s.dump() << '\n';
  if (!out) throw std::runtime_error(jsonl_path + ": write failed");
  if (summary_path.empty()) return;
  std::ofstream txt(summary_path);
  if (!txt) throw std::runtime_error(summary_path + ": cannot open for writing");
  txt << render_summary({r});
}

std::string render_summary(const std::vector<EvalReport>& reports) {
  std::size_t w = 6;
  for (const auto& r : reports) w = std::max(w, r.system.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w)) << "system" << "  accuracy  matches/total\n";
  for (const auto& r : reports)
    os << std::left << std::setw(static_cast<int>(w)) << r.system << "  " << std::fixed << std::setprecision(4)
       << std::setw(8) << r.accuracy << "  " << r.matches() << "/" << r.examples.size() << '\n';
  return os.str();
}

std::vector<std::string> typed_tokens(const std::vector<std::string>& tokens, const Database& db) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    const Entity* e = db.find(t);
    out.push_back(e != nullptr ? "_" + e->type + "_" : t);
  }
  return out;
}

void dump_cases(ModelSet& m, const Database& db, const std::vector<Utterance>& inputs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto z = paraphrase(m, inputs[i], Direction::ToCanonical, DecodeMode::Greedy).tokens;
    const auto parsed = parse_canonical(m, z, db);
    if (i > 0) out << '\n';
    out << "input: " << join(typed_tokens(inputs[i].tokens(), db)) << '\n';
    out << "canonical: " << join(typed_tokens(z, db)) << '\n';
    out << "lf: " << join(typed_tokens(tokenize(parsed.lf_text), db)) << '\n';
    out << "denotation: " << parsed.denotation.to_string() << '\n';
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace dpp
