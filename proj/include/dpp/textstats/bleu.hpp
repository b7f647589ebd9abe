#pragma once

#include <string>
#include <vector>

#include "dpp/textstats/utterance.hpp"

namespace dpp {

// Sentence-level BLEU with brevity penalty. Precisions for n >= 2 with zero
// matches use add-one smoothing, (0 + 1) / (total + 1); unigram precision is
// never smoothed, so zero unigram overlap scores 0.
double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
            int max_n = 4);

inline double bleu(const Utterance& candidate, const Utterance& reference, int max_n = 4) {
  return bleu(candidate.tokens(), reference.tokens(), max_n);
}

}  // namespace dpp
