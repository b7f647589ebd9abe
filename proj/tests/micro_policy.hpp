#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dpp/net/decode.hpp"
#include "dpp/textstats/vocab.hpp"
#include "dpp/train/trainer.hpp"

namespace dpp::testing {

// Four-symbol decoder (<pad>, <s>, </s> and one word) limited to two steps:
// thirteen possible outputs, so the expected reward can be enumerated.
struct MicroPolicy {
  static constexpr int kVocab = 4;
  static constexpr int kMaxLen = 2;

  net::BiEncoder<double> enc{"E", 5, 2, 2};
  net::AttnDecoder<double> dec{"D", kVocab, 2, 3, 4, 3};
  std::vector<int> src{4, 3};

  struct Outcome {
    std::vector<int> tokens;
    bool finished = true;
    double reward = 0.0;
  };
  std::vector<Outcome> outcomes;

  explicit MicroPolicy(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    net::init_uniform(enc, rng, 0.8);
    net::init_uniform(dec, rng, 0.8);
    std::uniform_real_distribution<double> r(-1.0, 1.0);
    outcomes.push_back({{}, true, r(rng)});
    for (int a = 0; a < kVocab; ++a) {
      if (a == Vocab::kEos) continue;
      outcomes.push_back({{a}, true, r(rng)});
      for (int b = 0; b < kVocab; ++b)
        if (b != Vocab::kEos) outcomes.push_back({{a, b}, false, r(rng)});
    }
  }

  net::Seq2Seq<double> model() { return {&enc, &dec, kMaxLen}; }

  std::vector<net::Parameter<double>*> decoder_params() {
    std::vector<net::Parameter<double>*> out;
    dec.visit([&](net::Parameter<double>& p) { out.push_back(&p); });
    return out;
  }

  double reward(const net::Hypothesis& h) const {
    for (const auto& o : outcomes)
      if (o.tokens == h.tokens && o.finished == h.finished) return o.reward;
    return NAN;
  }

  // P(outcome) for every outcome, from one teacher-forced pass.
  std::vector<double> probabilities() {
    net::Graph<double> g(false);
    auto ctx = dec.prepare(g, enc.encode(g, {src}, 0.0));
    std::vector<int> cols(outcomes.size(), 0);
    auto tiled = dec.select(g, ctx, cols);
    std::vector<std::vector<int>> seqs;
    std::vector<bool> fin;
    for (const auto& o : outcomes) {
      seqs.push_back(o.tokens);
      fin.push_back(o.finished);
    }
    const auto& nll = g.value(dec.sequence_nll(g, tiled, seqs, 0.0, {}, &fin));
    std::vector<double> p;
    for (std::size_t i = 0; i < outcomes.size(); ++i) p.push_back(std::exp(-nll(0, static_cast<Eigen::Index>(i))));
    return p;
  }

  // J = sum over outcomes of P(outcome) * reward(outcome).
  double expected_reward() {
    const auto p = probabilities();
    double j = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) j += p[i] * outcomes[i].reward;
    return j;
  }

  // Central differences of the enumerated J over every coordinate of `params`.
  std::vector<double> exact_gradient(const std::vector<net::Parameter<double>*>& params, double h = 1e-5) {
    std::vector<double> out;
    for (auto* p : params)
      for (Eigen::Index k = 0; k < p->value.size(); ++k) {
        double& w = p->value.data()[k];
        const double saved = w;
        w = saved + h;
        const double up = expected_reward();
        w = saved - h;
        const double down = expected_reward();
        w = saved;
        out.push_back((up - down) / (2 * h));
      }
    return out;
  }

  // Minus the gradient left by one surrogate backward pass, flattened.
  static std::vector<double> minus_grad(const std::vector<net::Parameter<double>*>& params) {
    std::vector<double> out;
    for (auto* p : params)
      for (Eigen::Index k = 0; k < p->grad.size(); ++k) out.push_back(-p->grad.data()[k]);
    return out;
  }

  // The estimator's expectation taken exactly: each outcome is fed once with
  // weight P * R, which is what an infinite sample would average to.
  std::vector<double> enumerated_estimate(const std::vector<net::Parameter<double>*>& params) {
    const auto p = probabilities();
    std::vector<std::vector<int>> samples;
    std::vector<double> adjusted;
    std::vector<bool> fin;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      samples.push_back(outcomes[i].tokens);
      fin.push_back(outcomes[i].finished);
      adjusted.push_back(p[i] * outcomes[i].reward * static_cast<double>(outcomes.size()));
    }
    for (auto* q : params) q->zero_grad();
    net::Graph<double> g(false);
    g.backward(reinforce_surrogate<double>(g, model(), {src}, {samples}, {adjusted}, {fin}, 0.0));
    return minus_grad(params);
  }

  // Exact expectation of the K = 2 mean-baseline estimator: every ordered
  // pair of outcomes weighted by its probability.
  std::vector<double> enumerated_pair_baseline(const std::vector<net::Parameter<double>*>& params) {
    const auto p = probabilities();
    std::vector<std::vector<int>> srcs;
    std::vector<std::vector<std::vector<int>>> samples;
    std::vector<std::vector<double>> adjusted;
    std::vector<std::vector<bool>> fin;
    for (std::size_t a = 0; a < outcomes.size(); ++a)
      for (std::size_t b = 0; b < outcomes.size(); ++b) {
        const double w = p[a] * p[b];
        const double mean = 0.5 * (outcomes[a].reward + outcomes[b].reward);
        srcs.push_back(src);
        samples.push_back({outcomes[a].tokens, outcomes[b].tokens});
        fin.push_back({outcomes[a].finished, outcomes[b].finished});
        adjusted.push_back({w * (outcomes[a].reward - mean), w * (outcomes[b].reward - mean)});
      }
    for (auto* q : params) q->zero_grad();
    net::Graph<double> g(false);
    g.backward(reinforce_surrogate<double>(g, model(), srcs, samples, adjusted, fin, 0.0));
    return minus_grad(params);
  }

  struct Estimate {
    std::vector<double> mean;
    std::vector<double> stderr_;  // from the spread of chunk means
  };

  // Mean of `resamples` REINFORCE estimates, each from K samples.
  // `baseline` subtracts the per-resample mean reward; `constant` replaces
  // every reward by that value.
  Estimate monte_carlo(const std::vector<net::Parameter<double>*>& params, int resamples, int K, bool baseline,
                       std::mt19937_64& rng, const double* constant = nullptr, int chunks = 50) {
    const int per_chunk = resamples / chunks;
    std::vector<std::vector<double>> chunk_means;
    const auto m = model();
    for (int c = 0; c < chunks; ++c) {
      std::vector<std::vector<int>> srcs(static_cast<std::size_t>(per_chunk), src);
      std::vector<std::vector<std::vector<int>>> samples(srcs.size());
      std::vector<std::vector<double>> adjusted(srcs.size());
      std::vector<std::vector<bool>> fin(srcs.size());
      for (int k = 0; k < K; ++k) {
        const auto hyps = net::sample(m, srcs, rng);
        for (std::size_t i = 0; i < srcs.size(); ++i) {
          samples[i].push_back(hyps[i].tokens);
          fin[i].push_back(hyps[i].finished);
          adjusted[i].push_back(constant ? *constant : reward(hyps[i]));
        }
      }
      if (baseline)
        for (auto& a : adjusted) {
          double b = 0.0;
          for (double r : a) b += r;
          b /= static_cast<double>(a.size());
          for (double& r : a) r -= b;
        }
      for (auto* q : params) q->zero_grad();
      net::Graph<double> g(false);
      g.backward(reinforce_surrogate<double>(g, m, srcs, samples, adjusted, fin, 0.0));
      auto est = minus_grad(params);
      for (double& e : est) e /= per_chunk;
      chunk_means.push_back(std::move(est));
    }
    Estimate out;
    const std::size_t n = chunk_means.front().size();
    out.mean.assign(n, 0.0);
    out.stderr_.assign(n, 0.0);
    for (const auto& cm : chunk_means)
      for (std::size_t i = 0; i < n; ++i) out.mean[i] += cm[i] / chunks;
    for (const auto& cm : chunk_means)
      for (std::size_t i = 0; i < n; ++i) out.stderr_[i] += (cm[i] - out.mean[i]) * (cm[i] - out.mean[i]);
    for (double& s : out.stderr_) s = std::sqrt(s / (chunks - 1) / chunks);
    return out;
  }
};

}  // namespace dpp::testing
