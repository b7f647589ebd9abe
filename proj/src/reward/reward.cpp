#include "dpp/reward/reward.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dpp {

namespace {

using Ids = std::vector<int>;

// Per-sequence log-probabilities under a language model, one eval-mode batch.
std::vector<double> lm_log_probs(net::LanguageModel<float>& lm, const std::vector<Ids>& seqs) {
  net::Graph<float> g(false);
  const auto& row = g.value(lm.sequence_nll(g, seqs, 0.0f));
  std::vector<double> out(seqs.size());
  for (std::size_t j = 0; j < seqs.size(); ++j) out[j] = -static_cast<double>(row(0, static_cast<Eigen::Index>(j)));
  return out;
}

std::vector<double> dis_probs(net::CnnClassifier<float>& dis, const std::vector<Ids>& seqs) {
  net::Graph<float> g(false);
  const auto& row = g.value(dis.logits(g, seqs, 0.0f));
  std::vector<double> out(seqs.size());
  for (std::size_t j = 0; j < seqs.size(); ++j)
    out[j] = 1.0 / (1.0 + std::exp(-static_cast<double>(row(0, static_cast<Eigen::Index>(j)))));
  return out;
}

// log P(targets[j] | sources[j]) through direction d, one eval-mode batch.
std::vector<double> cond_log_probs(ModelSet& m, Direction d, const std::vector<Tokens>& sources,
                                   const std::vector<Tokens>& targets) {
  std::vector<Ids> src;
  std::vector<Ids> tgt;
  for (std::size_t j = 0; j < sources.size(); ++j) {
    src.push_back(encoder_ids(m, sources[j]));
    tgt.push_back(target_ids(m, targets[j], d));
  }
  net::Graph<float> g(false);
  auto enc = m.para.encoder(d).encode(g, src, 0.0f);
  auto ctx = m.para.decoder(d).prepare(g, enc);
  const auto& row = g.value(m.para.decoder(d).sequence_nll(g, ctx, tgt, 0.0f));
  std::vector<double> out(sources.size());
  for (std::size_t j = 0; j < sources.size(); ++j) out[j] = -static_cast<double>(row(0, static_cast<Eigen::Index>(j)));
  return out;
}

double per_token(double log_prob, const Tokens& t) {
  if (t.empty()) throw std::invalid_argument("fluency of an empty utterance");
  return log_prob / static_cast<double>(t.size());
}

}  // namespace

double fluency_natural(ModelSet& m, const Tokens& x) {
  return per_token(m.aux.lm_x.log_prob(m.vocabs.natural.encode(x)), x);
}

double fluency_canonical(ModelSet& m, const Tokens& z, const Database& db) {
  const double lm = per_token(m.aux.lm_z.log_prob(m.vocabs.canonical.encode(z)), z);
  return lm + (parse_canonical(m, z, db).executable() ? 1.0 : 0.0);
}

double style(ModelSet& m, const Tokens& u, UtteranceKind target) {
  const double p = m.aux.dis.prob(m.vocabs.encoder.encode(u));
  return target == UtteranceKind::Canonical ? p : 1.0 - p;
}

double relevance(ModelSet& m, const Tokens& original, const Tokens& sampled, UtteranceKind original_kind) {
  const Direction d = original_kind == UtteranceKind::Natural ? Direction::ToNatural : Direction::ToCanonical;
  return net::sequence_log_prob(m.para.seq2seq(d), encoder_ids(m, sampled), target_ids(m, original, d));
}

RewardBundle total_and_baseline(std::vector<double> fluency, std::vector<double> style, std::vector<double> relevance) {
  const std::size_t K = fluency.size();
  if (K == 0 || style.size() != K || relevance.size() != K)
    throw std::invalid_argument("total_and_baseline: component sizes must match and be non-empty");
  RewardBundle b{std::move(fluency), std::move(style), std::move(relevance), {}, {}, 0.0};
  b.total.resize(K);
  for (std::size_t k = 0; k < K; ++k) b.total[k] = b.fluency[k] + b.style[k] + b.relevance[k];
  b.baseline = std::accumulate(b.total.begin(), b.total.end(), 0.0) / static_cast<double>(K);
  b.adjusted.resize(K);
  for (std::size_t k = 0; k < K; ++k) b.adjusted[k] = b.total[k] - b.baseline;
  return b;
}

std::vector<RewardBundle> score_samples(ModelSet& m, const Database& db, const std::vector<Tokens>& originals,
                                        const std::vector<std::vector<Tokens>>& samples, UtteranceKind original_kind) {
  if (samples.size() != originals.size()) throw std::invalid_argument("score_samples: size mismatch");
  const bool to_canonical = original_kind == UtteranceKind::Natural;
  const UtteranceKind sample_kind = to_canonical ? UtteranceKind::Canonical : UtteranceKind::Natural;
  const Direction dual = to_canonical ? Direction::ToNatural : Direction::ToCanonical;

  std::vector<Tokens> flat;
  std::vector<Tokens> flat_orig;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (const auto& s : samples[i]) {
      if (s.empty()) throw std::invalid_argument("score_samples: empty sample");
      flat.push_back(s);
      flat_orig.push_back(originals[i]);
    }
  std::vector<RewardBundle> out;
  if (flat.empty()) return out;

  std::vector<Ids> side_ids;
  std::vector<Ids> enc_ids;
  const Vocab& side = to_canonical ? m.vocabs.canonical : m.vocabs.natural;
  for (const auto& s : flat) {
    side_ids.push_back(side.encode(s));
    enc_ids.push_back(m.vocabs.encoder.encode(s));
  }
  const auto lm = lm_log_probs(to_canonical ? m.aux.lm_z : m.aux.lm_x, side_ids);
  const auto dis = dis_probs(m.aux.dis, enc_ids);
  const auto rel = cond_log_probs(m, dual, flat, flat_orig);
  std::vector<ParseOutcome> parses;
  if (to_canonical) parses = parse_canonical_batch(m, flat, db);

  std::size_t k = 0;
  for (const auto& group : samples) {
    std::vector<double> flu;
    std::vector<double> sty;
    std::vector<double> re;
    for (std::size_t j = 0; j < group.size(); ++j, ++k) {
      double f = per_token(lm[k], flat[k]);
      if (to_canonical && parses[k].executable()) f += 1.0;
      flu.push_back(f);
      sty.push_back(sample_kind == UtteranceKind::Canonical ? dis[k] : 1.0 - dis[k]);
      re.push_back(rel[k]);
    }
    if (group.empty()) {
      out.emplace_back();
      continue;
    }
    out.push_back(total_and_baseline(std::move(flu), std::move(sty), std::move(re)));
  }
  return out;
}

}  // namespace dpp
