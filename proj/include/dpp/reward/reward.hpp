#pragma once

#include <string>
#include <vector>

#include "dpp/domain/database.hpp"
#include "dpp/textstats/utterance.hpp"
#include "dpp/zoo/models.hpp"

namespace dpp {

using Tokens = std::vector<std::string>;

// Length-normalized fluency: log LM(framed sequence) / number of content
// tokens. Natural side uses LM_x; the canonical side adds 1 when the naive
// parser's output parses and executes without error.
double fluency_natural(ModelSet& m, const Tokens& x);
double fluency_canonical(ModelSet& m, const Tokens& z, const Database& db);

// P_dis(u) when the target side is canonical, 1 - P_dis(u) when natural.
double style(ModelSet& m, const Tokens& u, UtteranceKind target);

// log P(original | sampled) under the dual direction that regenerates
// `original` (ToNatural when original is natural).
double relevance(ModelSet& m, const Tokens& original, const Tokens& sampled, UtteranceKind original_kind);

struct RewardBundle {
  std::vector<double> fluency;
  std::vector<double> style;
  std::vector<double> relevance;
  std::vector<double> total;
  std::vector<double> adjusted;  // total - baseline
  double baseline = 0.0;

  std::size_t size() const { return total.size(); }
};

// total = fluency + style + relevance per sample; baseline = mean total.
RewardBundle total_and_baseline(std::vector<double> fluency, std::vector<double> style, std::vector<double> relevance);

// Rewards for K samples of each original, batched over every sample.
// Samples are sequences of the opposite kind to `original_kind`; none may be
// empty. Reads the models only.
std::vector<RewardBundle> score_samples(ModelSet& m, const Database& db, const std::vector<Tokens>& originals,
                                        const std::vector<std::vector<Tokens>>& samples, UtteranceKind original_kind);

}  // namespace dpp
