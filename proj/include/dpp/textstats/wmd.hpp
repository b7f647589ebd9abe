#pragma once

#include <string>
#include <vector>

#include "dpp/textstats/embedding.hpp"
#include "dpp/textstats/utterance.hpp"

namespace dpp {

/// Normalized bag-of-words: unique tokens (first-occurrence order) and their
/// relative frequencies, summing to 1.
struct BagOfWords {
  std::vector<std::string> words;
  std::vector<double> weights;
};

BagOfWords make_bag(const std::vector<std::string>& tokens);

// Exact minimum-cost transport between two discrete distributions with the
// given row-major cost matrix (supply.size() x demand.size()). Both
// distributions must carry the same total mass. Solved as a min-cost flow with
// successive shortest paths.
double transport_cost(const std::vector<double>& supply, const std::vector<double>& demand,
                      const std::vector<double>& cost);

// Euclidean distance between two embedding rows.
double embedding_distance(const EmbeddingTable& emb, const std::string& a, const std::string& b);

// max of the two one-sided relaxations (each word moves all its mass to its
// nearest counterpart). A lower bound on the exact distance.
double relaxed_wmd(const std::vector<std::string>& a, const std::vector<std::string>& b,
                   const EmbeddingTable& emb);

// Word Mover's Distance. Exact when both utterances have at most
// `exact_limit` tokens; otherwise falls back to relaxed_wmd.
double wmd(const std::vector<std::string>& a, const std::vector<std::string>& b,
           const EmbeddingTable& emb, std::size_t exact_limit = 12);

inline double wmd(const Utterance& a, const Utterance& b, const EmbeddingTable& emb) {
  return wmd(a.tokens(), b.tokens(), emb);
}

}  // namespace dpp
