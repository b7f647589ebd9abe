#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dpp/domain/corpora.hpp"
#include "dpp/domain/database.hpp"
#include "dpp/zoo/models.hpp"

namespace dpp {

struct EvalExample {
  std::string input;                // natural utterance x
  std::string predicted_canonical;  // z_hat (empty for one-stage parsers)
  std::string predicted_lf;         // decoded LF tokens, possibly malformed
  std::string predicted_denotation;
  std::string gold_denotation;
  bool match = false;
};

/// accuracy == matches / examples.size(); examples follow the input order.
struct EvalReport {
  std::string system;
  double accuracy = 0.0;
  std::vector<EvalExample> examples;
  std::string fingerprint;
  // Recorded so readers know how near-equal beam candidates were ordered.
  std::string beam_tie_rule = "higher length-normalized score, then earlier completion";

  std::size_t matches() const;
};

// Builds the report from per-example records, counting match flags.
EvalReport tally(std::string system, std::vector<EvalExample> examples, std::string fingerprint = "");

// Executes `predicted_lf_tokens` and compares its denotation with the gold
// logical form's; parse and execution failures never match.
EvalExample score_prediction(const GoldPair& gold, const std::string& canonical,
                             const std::vector<std::string>& predicted_lf_tokens, const Database& db);

// Canonicalizer: natural utterance -> canonical tokens (may be empty).
using Canonicalizer = std::function<std::vector<std::string>(const Utterance&)>;
// Parser: canonical tokens -> LF tokens (may be malformed).
using LfParser = std::function<std::vector<std::string>(const std::vector<std::string>&)>;

// parse(canonicalize(x)) for every eval pair, scored at the denotation level.
EvalReport evaluate_pipeline(const Canonicalizer& canonicalize, const LfParser& parse, const Database& db,
                             const std::vector<GoldPair>& eval, const std::string& system);

// P_nsp(canonicalize(x)) for every eval pair. Only m.nsp is read.
EvalReport evaluate_with(const Canonicalizer& canonicalize, ModelSet& m, const Database& db,
                         const std::vector<GoldPair>& eval, const std::string& system);

// Beam-decodes z_hat (top-1) with D_z.E, then parses and executes it.
// Throws std::logic_error when P_nsp is not frozen.
EvalReport evaluate(ModelSet& m, const Database& db, const std::vector<GoldPair>& eval, int beam = 5,
                    const std::string& fingerprint = "");

// JSONL with one record per example, then a final summary record; plus a
// plain-text summary table when summary_path is non-empty.
void write_report(const EvalReport& r, const std::string& jsonl_path, const std::string& summary_path = "");
std::string render_summary(const std::vector<EvalReport>& reports);

// Replaces every token naming a database entity with "_<type>_".
std::vector<std::string> typed_tokens(const std::vector<std::string>& tokens, const Database& db);

// One block per input: input, canonical, lf, denotation, in that order and
// separated by blank lines. The canonical line is greedy paraphrase(x).
// Throws std::runtime_error when the file cannot be written.
void dump_cases(ModelSet& m, const Database& db, const std::vector<Utterance>& inputs, const std::string& path);

}  // namespace dpp
