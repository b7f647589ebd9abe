#pragma once

#include <random>
#include <vector>

#include "dpp/net/layers.hpp"

namespace dpp::net {

struct Hypothesis {
  std::vector<int> tokens;  // emitted ids, </s> excluded
  double log_prob = 0.0;    // includes log P(</s>) when finished
  bool finished = false;

  int emitted() const { return static_cast<int>(tokens.size()) + (finished ? 1 : 0); }
  // Length-normalized log-probability (per emitted step, </s> included).
  double score() const { return emitted() > 0 ? log_prob / emitted() : log_prob; }
};

// Encoder-decoder pairing; does not own the modules.
template <typename T>
struct Seq2Seq {
  BiEncoder<T>* encoder = nullptr;
  AttnDecoder<T>* decoder = nullptr;
  int max_len = 1;
};

// Argmax decoding for every source in one batched pass (eval mode).
template <typename T>
std::vector<Hypothesis> greedy(const Seq2Seq<T>& model, const std::vector<std::vector<int>>& srcs);

// Ancestral sampling, one draw per source (eval mode).
template <typename T>
std::vector<Hypothesis> sample(const Seq2Seq<T>& model, const std::vector<std::vector<int>>& srcs,
                               std::mt19937_64& rng);

// Beam search, returned sorted by score() (descending; earlier completion
// first on ties). With width 1 the single result equals greedy().
template <typename T>
std::vector<Hypothesis> beam(const Seq2Seq<T>& model, const std::vector<int>& src, int width);

// Teacher-forced log P(tgt </s> | src), eval mode.
template <typename T>
double sequence_log_prob(const Seq2Seq<T>& model, const std::vector<int>& src, const std::vector<int>& tgt);

}  // namespace dpp::net
