#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpp/domain/database.hpp"
#include "dpp/domain/grammar.hpp"
#include "dpp/domain/naturalizer.hpp"
#include "dpp/textstats/utterance.hpp"

namespace dpp {

struct GoldPair {
  Utterance natural;
  Utterance canonical;
  LogicalForm lf;
};

/// Unpaired training corpora plus aligned evaluation/semi-supervised pools.
struct Corpora {
  std::vector<Utterance> natural;    // X
  std::vector<Utterance> canonical;  // Z
  std::vector<GoldPair> eval;
  std::vector<GoldPair> semi_pool;
  // Grammar pairs on the training side of the split (the naive parser's data).
  std::vector<CanonicalPair> train_pairs;
  std::vector<CanonicalPair> eval_pairs;
};

struct CorpusOptions {
  int paraphrases_per_canonical = 8;
  double eval_fraction = 0.2;
  std::uint64_t seed = 0;
};

// Number of logical forms placed in the evaluation split:
// max(1, floor(eval_fraction * n)). Throws ConfigError when the fraction is
// outside (0, 1) or no training pair would remain.
std::size_t eval_split_size(std::size_t n, double eval_fraction);

// Splits by logical form, naturalizes each canonical utterance, and discards
// the natural/canonical alignment on the training side.
Corpora build_corpora(const std::vector<CanonicalPair>& pairs, const RewriteRules& rules,
                      const CorpusOptions& options);

// JSONL records: {"kind": natural|canonical|pair, "tokens": "...", "lf"?, "denotation"?}
struct CorpusRecord {
  std::string kind;
  std::string tokens;
  std::optional<std::string> lf;
  std::optional<std::string> natural;  // pair records only
  std::optional<std::string> denotation;
};

void write_jsonl(const std::string& path, const std::vector<CorpusRecord>& records);
std::vector<CorpusRecord> read_jsonl(const std::string& path);

std::vector<CorpusRecord> to_records(const std::vector<Utterance>& utterances);
std::vector<CorpusRecord> to_records(const std::vector<GoldPair>& pairs, const Database* db = nullptr);
std::vector<CorpusRecord> to_records(const std::vector<CanonicalPair>& pairs, const Database* db = nullptr);

std::vector<Utterance> utterances_from(const std::vector<CorpusRecord>& records, UtteranceKind kind);
std::vector<GoldPair> gold_pairs_from(const std::vector<CorpusRecord>& records);
std::vector<CanonicalPair> canonical_pairs_from(const std::vector<CorpusRecord>& records);

}  // namespace dpp
