#pragma once

#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dpp/textstats/embedding.hpp"
#include "dpp/textstats/utterance.hpp"
#include "dpp/textstats/vocab.hpp"

namespace dpp {

struct NoiseSpec {
  double p_max = 0.2;
  int candidates = 50;       // C
  double insert_low = 0.10;  // fraction of candidate tokens inserted
  double insert_high = 0.20;
  int ngram = 2;
  bool drop = true;
  bool add = true;
  bool shuffle = true;

  // Throws ConfigError naming the offending field.
  void validate() const;
  bool any() const { return drop || add || shuffle; }
  // "none", or the enabled channels joined by '+', e.g. "drop+shuffle".
  std::string label() const;
};

// Each token is dropped independently with probability
// min(p_max, w(t) / sum of w over the utterance), w being the corpus count.
// Never returns an empty utterance: if every token is dropped, the one with
// the lowest drop probability (earliest on ties) is kept.
Utterance drop_words(const Utterance& u, const Vocab& vocab, double p_max, std::mt19937_64& rng);

// Distance from `u` to pool[index]; lets callers memoize WMD.
using CandidateDistance = std::function<double(const Utterance& u, std::size_t pool_index)>;

// Samples min(C, |pool|) candidates without replacement and returns the index
// of the one nearest to `u`; ties go to the earliest in sample order.
std::size_t select_candidate_index(const Utterance& u, std::span<const Utterance> pool, int C,
                                   const CandidateDistance& distance, std::mt19937_64& rng);

// WMD-nearest of C randomly sampled candidates. Throws ConfigError on an empty pool.
Utterance select_candidate(const Utterance& u, std::span<const Utterance> pool, int C,
                           const EmbeddingTable& emb, std::mt19937_64& rng);

// Inserts k = clamp(round(f * |source|), 1, |source|) tokens sampled without
// replacement from `source` (f uniform in [low, high]), each at a uniformly
// drawn position of the current sequence.
Utterance add_mixed(const Utterance& u, const Utterance& source, double low, double high, std::mt19937_64& rng);

// Chunks tokens left-to-right into groups of n and permutes the groups.
Utterance shuffle_ngrams(const Utterance& u, int n, std::mt19937_64& rng);

// drop -> add -> shuffle, skipping disabled channels.
Utterance corrupt(const Utterance& u, const NoiseSpec& spec, const Vocab& vocab, std::span<const Utterance> pool,
                  const CandidateDistance& distance, std::mt19937_64& rng);
Utterance corrupt(const Utterance& u, const NoiseSpec& spec, const Vocab& vocab, std::span<const Utterance> pool,
                  const EmbeddingTable& emb, std::mt19937_64& rng);

}  // namespace dpp
