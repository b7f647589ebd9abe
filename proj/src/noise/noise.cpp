#include "dpp/noise/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dpp/error.hpp"
#include "dpp/textstats/wmd.hpp"

namespace dpp {

void NoiseSpec::validate() const {
  if (!(p_max > 0.0 && p_max <= 1.0)) throw ConfigError("noise.p_max must lie in (0, 1]");
  if (candidates < 1) throw ConfigError("noise.C must be >= 1");
  if (!(insert_low >= 0.0 && insert_low <= insert_high && insert_high <= 1.0))
    throw ConfigError("noise.insert_low/insert_high must satisfy 0 <= low <= high <= 1");
  if (ngram < 1) throw ConfigError("noise.ngram must be >= 1");
}

std::string NoiseSpec::label() const {
  std::string s;
  auto push = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += '+';
    s += name;
  };
  push(drop, "drop");
  push(add, "add");
  push(shuffle, "shuffle");
  return s.empty() ? "none" : s;
}

Utterance drop_words(const Utterance& u, const Vocab& vocab, double p_max, std::mt19937_64& rng) {
  const auto& toks = u.tokens();
  std::vector<double> w(toks.size());
  double total = 0.0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    w[i] = static_cast<double>(vocab.count(toks[i]));
    total += w[i];
  }
  std::vector<double> p(toks.size(), 0.0);
  if (total > 0.0)
    for (std::size_t i = 0; i < toks.size(); ++i) p[i] = std::min(p_max, w[i] / total);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < toks.size(); ++i)
    if (unif(rng) >= p[i]) kept.push_back(toks[i]);
  if (kept.empty()) {
    const auto keep = static_cast<std::size_t>(std::min_element(p.begin(), p.end()) - p.begin());
    kept.push_back(toks[keep]);
  }
  return Utterance(std::move(kept), u.kind());
}

std::size_t select_candidate_index(const Utterance& u, std::span<const Utterance> pool, int C,
                                   const CandidateDistance& distance, std::mt19937_64& rng) {
  if (pool.empty()) throw ConfigError("candidate pool is empty");
  const std::size_t k = std::min(static_cast<std::size_t>(std::max(C, 1)), pool.size());
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: idx[0..k) is a uniform sample in random order.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  if (k == 1) return idx[0];
  std::size_t best = idx[0];
  double best_d = distance(u, idx[0]);
  for (std::size_t i = 1; i < k; ++i) {
    const double d = distance(u, idx[i]);
    if (d < best_d) {
      best_d = d;
      best = idx[i];
    }
  }
  return best;
}

Utterance select_candidate(const Utterance& u, std::span<const Utterance> pool, int C,
                           const EmbeddingTable& emb, std::mt19937_64& rng) {
  auto dist = [&](const Utterance& a, std::size_t j) { return wmd(a, pool[j], emb); };
  return pool[select_candidate_index(u, pool, C, dist, rng)];
}

Utterance add_mixed(const Utterance& u, const Utterance& source, double low, double high, std::mt19937_64& rng) {
  const double f = low < high ? std::uniform_real_distribution<double>(low, high)(rng) : low;
  const double n = static_cast<double>(source.size());
  auto k = static_cast<std::size_t>(std::floor(f * n + 0.5));
  k = std::clamp<std::size_t>(k, 1, source.size());

  std::vector<std::size_t> idx(source.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<std::string> out = u.tokens();
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pos(0, out.size());
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos(rng)), source.tokens()[idx[i]]);
  }
  return Utterance(std::move(out), u.kind());
}

Utterance shuffle_ngrams(const Utterance& u, int n, std::mt19937_64& rng) {
  const auto& toks = u.tokens();
  const auto step = static_cast<std::size_t>(std::max(n, 1));
  if (toks.size() <= step) return u;
  std::vector<std::vector<std::string>> groups;
  for (std::size_t i = 0; i < toks.size(); i += step)
    groups.emplace_back(toks.begin() + static_cast<std::ptrdiff_t>(i),
                        toks.begin() + static_cast<std::ptrdiff_t>(std::min(i + step, toks.size())));
  std::shuffle(groups.begin(), groups.end(), rng);
  std::vector<std::string> out;
  for (auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return Utterance(std::move(out), u.kind());
}

Utterance corrupt(const Utterance& u, const NoiseSpec& spec, const Vocab& vocab, std::span<const Utterance> pool,
                  const CandidateDistance& distance, std::mt19937_64& rng) {
  spec.validate();
  Utterance out = u;
  if (spec.drop) out = drop_words(out, vocab, spec.p_max, rng);
  if (spec.add) {
    // Candidates are chosen against the original utterance.
    const std::size_t j = select_candidate_index(u, pool, spec.candidates, distance, rng);
    out = add_mixed(out, pool[j], spec.insert_low, spec.insert_high, rng);
  }
  if (spec.shuffle) out = shuffle_ngrams(out, spec.ngram, rng);
  return out;
}

Utterance corrupt(const Utterance& u, const NoiseSpec& spec, const Vocab& vocab, std::span<const Utterance> pool,
                  const EmbeddingTable& emb, std::mt19937_64& rng) {
  auto dist = [&](const Utterance& a, std::size_t j) { return wmd(a, pool[j], emb); };
  return corrupt(u, spec, vocab, pool, dist, rng);
}

}  // namespace dpp
