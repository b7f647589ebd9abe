#include "dpp/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dpp/error.hpp"
#include "dpp/net/optimizer.hpp"
#include "dpp/textstats/bleu.hpp"
#include "dpp/textstats/wmd.hpp"

namespace dpp {

namespace {

using Clock = std::chrono::steady_clock;
using Ids = std::vector<int>;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename Module>
std::vector<net::Parameter<float>*> params_of(Module& m) {
  std::vector<net::Parameter<float>*> out;
  m.visit([&](net::Parameter<float>& p) { out.push_back(&p); });
  return out;
}

std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

std::vector<Tokens> tokens_of(const std::vector<Utterance>& us) {
  std::vector<Tokens> out;
  out.reserve(us.size());
  for (const auto& u : us) out.push_back(u.tokens());
  return out;
}

net::Adam::Options adam_options(const TrainConfig& cfg) {
  net::Adam::Options o;
  o.lr = cfg.hp.lr;
  o.clip_norm = cfg.clip_norm;
  return o;
}

void check_finite(double loss, const std::string& phase, int epoch) {
  if (!std::isfinite(loss))
    throw NumericError(phase + ": non-finite loss at epoch " + std::to_string(epoch));
}

// Sums valid terms; invalid Expr when none is valid.
net::Expr sum_terms(net::Graph<float>& g, const std::vector<net::Expr>& terms) {
  std::vector<net::Expr> valid;
  for (auto e : terms)
    if (e.valid()) valid.push_back(e);
  if (valid.empty()) return {};
  return valid.size() == 1 ? valid.front() : g.add_n(valid);
}

// ---- auxiliary training ----

struct Batcher {
  // Index batches over one corpus, reshuffled per epoch.
  static std::vector<std::vector<std::size_t>> make(std::size_t n, int batch, std::mt19937_64& rng) {
    const auto perm = permutation(n, rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(batch))
      out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(i),
                       perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + static_cast<std::size_t>(batch))));
    return out;
  }
};

void record(MetricsSink* sink, MetricsRecord r, Clock::time_point t0) {
  if (sink == nullptr) return;
  r.wall_seconds = seconds_since(t0);
  sink->append(r);
}

AuxSummary train_lm(net::LanguageModel<float>& lm, const std::vector<Ids>& data, const TrainConfig& cfg,
                    const std::string& name, MetricsSink* sink) {
  if (data.empty()) throw ConfigError(name + ": empty training corpus");
  std::mt19937_64 order(sub_seed(cfg.seed, name + "/order"));
  std::mt19937_64 drop(sub_seed(cfg.seed, name + "/dropout"));
  net::Adam opt(params_of(lm), adam_options(cfg));
  AuxSummary s{name, cfg.epochs_aux, cfg.epochs_aux, 0.0, 0.0};
  const auto t0 = Clock::now();
  for (int epoch = 1; epoch <= cfg.epochs_aux; ++epoch) {
    double total = 0.0;
    for (const auto& idx : Batcher::make(data.size(), cfg.hp.batch, order)) {
      std::vector<Ids> batch;
      for (auto i : idx) batch.push_back(data[i]);
      net::Graph<float> g(true, &drop);
      auto loss = g.sum(lm.sequence_nll(g, batch, static_cast<float>(cfg.hp.dropout)));
      const double v = g.scalar(loss);
      check_finite(v, name, epoch);
      total += v;
      g.backward(g.scale(loss, 1.0f / static_cast<float>(batch.size())));
      opt.step();
    }
    s.final_loss = total / static_cast<double>(data.size());
    record(sink, MetricsRecord{"aux/" + name, epoch, {{"nll", s.final_loss}}, {}, {}, {}, {}, "", 0.0}, t0);
  }
  return s;
}

AuxSummary train_dis(net::CnnClassifier<float>& dis, const std::vector<Ids>& data, const std::vector<float>& labels,
                     const TrainConfig& cfg, MetricsSink* sink) {
  const std::string name = "dis";
  if (data.empty()) throw ConfigError("dis: empty training corpus");
  std::mt19937_64 order(sub_seed(cfg.seed, name + "/order"));
  std::mt19937_64 drop(sub_seed(cfg.seed, name + "/dropout"));
  net::Adam opt(params_of(dis), adam_options(cfg));
  AuxSummary s{name, cfg.epochs_aux, cfg.epochs_aux, 0.0, 0.0};
  const auto t0 = Clock::now();
  for (int epoch = 1; epoch <= cfg.epochs_aux; ++epoch) {
    double total = 0.0;
    for (const auto& idx : Batcher::make(data.size(), cfg.hp.batch, order)) {
      std::vector<Ids> batch;
      std::vector<float> y;
      for (auto i : idx) {
        batch.push_back(data[i]);
        y.push_back(labels[i]);
      }
      const std::vector<float> w(batch.size(), 1.0f);
      net::Graph<float> g(true, &drop);
      auto loss = g.sum(g.bce_with_logits(dis.logits(g, batch, static_cast<float>(cfg.hp.dropout)), y, w));
      const double v = g.scalar(loss);
      check_finite(v, name, epoch);
      total += v;
      g.backward(g.scale(loss, 1.0f / static_cast<float>(batch.size())));
      opt.step();
    }
    s.final_loss = total / static_cast<double>(data.size());
    record(sink, MetricsRecord{"aux/dis", epoch, {{"bce", s.final_loss}}, {}, {}, {}, {}, "", 0.0}, t0);
  }
  // Training-set accuracy, eval mode, batched.
  int correct = 0;
  for (std::size_t i = 0; i < data.size(); i += 64) {
    const std::size_t end = std::min(data.size(), i + 64);
    std::vector<Ids> batch(data.begin() + static_cast<std::ptrdiff_t>(i), data.begin() + static_cast<std::ptrdiff_t>(end));
    net::Graph<float> g(false);
    const auto& z = g.value(dis.logits(g, batch, 0.0f));
    for (std::size_t j = i; j < end; ++j)
      correct += ((z(0, static_cast<Eigen::Index>(j - i)) > 0.0f) == (labels[j] > 0.5f)) ? 1 : 0;
  }
  s.metric = static_cast<double>(correct) / static_cast<double>(data.size());
  return s;
}

double parser_dev_nll(ModelSet& m, const std::vector<Ids>& src, const std::vector<Ids>& tgt) {
  double total = 0.0;
  for (std::size_t i = 0; i < src.size(); i += 64) {
    const std::size_t end = std::min(src.size(), i + 64);
    std::vector<Ids> s(src.begin() + static_cast<std::ptrdiff_t>(i), src.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<Ids> t(tgt.begin() + static_cast<std::ptrdiff_t>(i), tgt.begin() + static_cast<std::ptrdiff_t>(end));
    net::Graph<float> g(false);
    auto enc = m.nsp.enc.encode(g, s, 0.0f);
    auto ctx = m.nsp.dec.prepare(g, enc);
    total += g.scalar(g.sum(m.nsp.dec.sequence_nll(g, ctx, t, 0.0f)));
  }
  return total / static_cast<double>(std::max<std::size_t>(1, src.size()));
}

AuxSummary train_nsp(ModelSet& m, const TrainingData& d, const TrainConfig& cfg, MetricsSink* sink) {
  const std::string name = "nsp";
  if (d.parser_train.empty()) throw ConfigError("nsp: empty training corpus");
  std::vector<Ids> src;
  std::vector<Ids> tgt;
  for (const auto& p : d.parser_train) {
    src.push_back(m.vocabs.canonical.encode(p.canonical));
    tgt.push_back(m.vocabs.lf.encode(p.lf.tokens()));
  }
  std::vector<Ids> dev_src;
  std::vector<Ids> dev_tgt;
  for (const auto& p : d.parser_dev) {
    dev_src.push_back(m.vocabs.canonical.encode(p.canonical));
    dev_tgt.push_back(m.vocabs.lf.encode(p.lf.tokens()));
  }
  std::mt19937_64 order(sub_seed(cfg.seed, name + "/order"));
  std::mt19937_64 drop(sub_seed(cfg.seed, name + "/dropout"));
  net::Adam opt(params_of(m.nsp), adam_options(cfg));
  AuxSummary s{name, cfg.epochs_aux, 0, 0.0, -1.0};
  NaiveParser best = m.nsp;
  double best_nll = 0.0;
  const auto t0 = Clock::now();
  for (int epoch = 1; epoch <= cfg.epochs_aux; ++epoch) {
    double total = 0.0;
    for (const auto& idx : Batcher::make(src.size(), cfg.hp.batch, order)) {
      std::vector<Ids> bs;
      std::vector<Ids> bt;
      for (auto i : idx) {
        bs.push_back(src[i]);
        bt.push_back(tgt[i]);
      }
      net::Graph<float> g(true, &drop);
      const auto dp = static_cast<float>(cfg.hp.dropout);
      auto enc = m.nsp.enc.encode(g, bs, dp);
      auto ctx = m.nsp.dec.prepare(g, enc);
      auto loss = g.sum(m.nsp.dec.sequence_nll(g, ctx, bt, dp));
      const double v = g.scalar(loss);
      check_finite(v, name, epoch);
      total += v;
      g.backward(g.scale(loss, 1.0f / static_cast<float>(bs.size())));
      opt.step();
    }
    const double train_nll = total / static_cast<double>(src.size());
    const double em = parser_exact_match(m, d.parser_dev);
    const double dev_nll = parser_dev_nll(m, dev_src, dev_tgt);
    if (em > s.metric || (em == s.metric && dev_nll < best_nll)) {
      s.metric = em;
      s.best_epoch = epoch;
      best_nll = dev_nll;
      best = m.nsp;
    }
    s.final_loss = train_nll;
    record(sink, MetricsRecord{"aux/nsp", epoch, {{"nll", train_nll}, {"dev_nll", dev_nll}}, {}, {}, {}, em, "", 0.0}, t0);
  }
  m.nsp = best;
  return s;
}

}  // namespace

TrainingData make_training_data(const Corpora& c, const TrainConfig& cfg) {
  TrainingData d;
  d.natural = c.natural;
  d.canonical = c.canonical;
  const auto dev = static_cast<std::size_t>(cfg.dev_size);
  d.dev_natural.assign(c.natural.begin(), c.natural.begin() + static_cast<std::ptrdiff_t>(std::min(dev, c.natural.size())));
  d.dev_canonical.assign(c.canonical.begin(),
                         c.canonical.begin() + static_cast<std::ptrdiff_t>(std::min(dev, c.canonical.size())));
  d.semi_pool = c.semi_pool;
  const std::size_t n = c.train_pairs.size();
  if (n < 2) {
    d.parser_train = c.train_pairs;
    d.parser_dev = c.train_pairs;
    return d;
  }
  const std::size_t n_dev =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(cfg.parser_dev_fraction * static_cast<double>(n))), 1, n - 1);
  std::mt19937_64 rng(sub_seed(cfg.seed, "parser-split"));
  auto perm = permutation(n, rng);
  std::vector<bool> is_dev(n, false);
  for (std::size_t i = 0; i < n_dev; ++i) is_dev[perm[i]] = true;
  for (std::size_t i = 0; i < n; ++i) (is_dev[i] ? d.parser_dev : d.parser_train).push_back(c.train_pairs[i]);
  return d;
}

std::size_t longest_sequence(const TrainingData& d) {
  std::size_t n = 1;
  for (const auto& u : d.natural) n = std::max(n, u.size());
  for (const auto& u : d.canonical) n = std::max(n, u.size());
  for (const auto& p : d.parser_train) n = std::max(n, p.lf.tokens().size());
  for (const auto& p : d.parser_dev) n = std::max(n, p.lf.tokens().size());
  return n;
}

double parser_exact_match(ModelSet& m, const std::vector<CanonicalPair>& pairs) {
  if (pairs.empty()) return 0.0;
  std::vector<Ids> src;
  for (const auto& p : pairs) src.push_back(m.vocabs.canonical.encode(p.canonical));
  int hits = 0;
  for (std::size_t i = 0; i < src.size(); i += 64) {
    const std::size_t end = std::min(src.size(), i + 64);
    std::vector<Ids> s(src.begin() + static_cast<std::ptrdiff_t>(i), src.begin() + static_cast<std::ptrdiff_t>(end));
    const auto hyps = net::greedy(m.nsp.seq2seq(), s);
    for (std::size_t j = i; j < end; ++j)
      hits += m.vocabs.lf.decode(hyps[j - i].tokens) == pairs[j].lf.tokens() ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

std::vector<AuxSummary> pretrain_auxiliaries(ModelSet& m, const TrainingData& d, const TrainConfig& cfg,
                                             MetricsSink* sink) {
  cfg.validate();
  if (d.natural.empty()) throw ConfigError("natural corpus is empty");
  if (d.canonical.empty()) throw ConfigError("canonical corpus is empty");
  std::vector<Ids> xs;
  std::vector<Ids> zs;
  for (const auto& u : d.natural) xs.push_back(m.vocabs.natural.encode(u));
  for (const auto& u : d.canonical) zs.push_back(m.vocabs.canonical.encode(u));
  std::vector<AuxSummary> out;
  out.push_back(train_lm(m.aux.lm_x, xs, cfg, "lmx", sink));
  out.push_back(train_lm(m.aux.lm_z, zs, cfg, "lmz", sink));
  std::vector<Ids> dis_data;
  std::vector<float> labels;
  for (const auto& u : d.natural) {
    dis_data.push_back(m.vocabs.encoder.encode(u));
    labels.push_back(0.0f);
  }
  for (const auto& u : d.canonical) {
    dis_data.push_back(m.vocabs.encoder.encode(u));
    labels.push_back(1.0f);
  }
  out.push_back(train_dis(m.aux.dis, dis_data, labels, cfg, sink));
  out.push_back(train_nsp(m, d, cfg, sink));
  m.aux.summaries = out;
  m.aux.frozen = true;
  m.nsp.frozen = true;
  return out;
}

// ---- noise ----

NoiseSource::NoiseSource(const NoiseSpec& spec, const Vocabularies& vocabs, const std::vector<Utterance>& natural,
                         const std::vector<Utterance>& canonical, const EmbeddingTable& emb)
    : spec_(spec), vocabs_(&vocabs), natural_(&natural), canonical_(&canonical), emb_(&emb) {
  spec_.validate();
}

double NoiseSource::distance(const Utterance& u, std::size_t index) {
  const bool natural = u.kind() == UtteranceKind::Natural;
  const auto& pool = natural ? *canonical_ : *natural_;
  auto& row = memo_[std::string(natural ? "x:" : "z:") + u.text()];
  if (row.empty()) row.assign(pool.size(), -1.0);
  if (row[index] < 0) row[index] = wmd(u, pool[index], *emb_);
  return row[index];
}

Utterance NoiseSource::corrupt(const Utterance& u, std::mt19937_64& rng) {
  const bool natural = u.kind() == UtteranceKind::Natural;
  const auto& pool = natural ? *canonical_ : *natural_;
  const Vocab& counts = natural ? vocabs_->natural : vocabs_->canonical;
  return dpp::corrupt(u, spec_, counts, pool, [this](const Utterance& x, std::size_t i) { return distance(x, i); }, rng);
}

// ---- per-batch losses ----

LossTerm pair_loss(ModelSet& m, net::Graph<float>& g, const std::vector<Tokens>& sources,
                   const std::vector<Tokens>& targets, Direction d, float dropout) {
  LossTerm t;
  std::vector<Ids> src;
  std::vector<Ids> tgt;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].empty()) {
      ++t.skipped;
      continue;
    }
    src.push_back(encoder_ids(m, sources[i]));
    tgt.push_back(target_ids(m, targets[i], d));
  }
  if (src.empty()) return t;
  auto enc = m.para.encoder(d).encode(g, src, dropout);
  auto ctx = m.para.decoder(d).prepare(g, enc);
  t.loss = g.sum(m.para.decoder(d).sequence_nll(g, ctx, tgt, dropout));
  t.sequences = static_cast<int>(src.size());
  return t;
}

LossTerm dae_loss(ModelSet& m, net::Graph<float>& g, const std::vector<Utterance>& batch_x,
                  const std::vector<Utterance>& batch_z, NoiseSource& noise, std::mt19937_64& rng, float dropout) {
  std::vector<Tokens> nx;
  std::vector<Tokens> nz;
  for (const auto& x : batch_x) nx.push_back(noise.corrupt(x, rng).tokens());
  for (const auto& z : batch_z) nz.push_back(noise.corrupt(z, rng).tokens());
  auto a = pair_loss(m, g, nx, tokens_of(batch_x), Direction::ToNatural, dropout);
  auto b = pair_loss(m, g, nz, tokens_of(batch_z), Direction::ToCanonical, dropout);
  return LossTerm{sum_terms(g, {a.loss, b.loss}), a.sequences + b.sequences, a.skipped + b.skipped};
}

LossTerm bt_loss(ModelSet& m, net::Graph<float>& g, const std::vector<Utterance>& batch_x,
                 const std::vector<Utterance>& batch_z, float dropout) {
  const auto xs = tokens_of(batch_x);
  const auto zs = tokens_of(batch_z);
  std::vector<Tokens> z_hat;
  for (auto& p : paraphrase_greedy(m, xs, Direction::ToCanonical)) z_hat.push_back(std::move(p.tokens));
  std::vector<Tokens> x_hat;
  for (auto& p : paraphrase_greedy(m, zs, Direction::ToNatural)) x_hat.push_back(std::move(p.tokens));
  auto a = pair_loss(m, g, z_hat, xs, Direction::ToNatural, dropout);
  auto b = pair_loss(m, g, x_hat, zs, Direction::ToCanonical, dropout);
  return LossTerm{sum_terms(g, {a.loss, b.loss}), a.sequences + b.sequences, a.skipped + b.skipped};
}

template <typename T>
net::Expr reinforce_surrogate(net::Graph<T>& g, const net::Seq2Seq<T>& model, const std::vector<Ids>& srcs,
                              const std::vector<std::vector<Ids>>& samples, const std::vector<std::vector<double>>& adjusted,
                              const std::vector<std::vector<bool>>& finished, T dropout) {
  if (samples.size() != srcs.size() || adjusted.size() != srcs.size() || (!finished.empty() && finished.size() != srcs.size()))
    throw std::invalid_argument("reinforce_surrogate: size mismatch");
  std::vector<int> cols;
  std::vector<Ids> flat;
  std::vector<T> weights;
  std::vector<bool> fin;
  for (std::size_t i = 0; i < srcs.size(); ++i) {
    const std::size_t K = samples[i].size();
    if (adjusted[i].size() != K) throw std::invalid_argument("reinforce_surrogate: reward count mismatch");
    for (std::size_t k = 0; k < K; ++k) {
      cols.push_back(static_cast<int>(i));
      flat.push_back(samples[i][k]);
      weights.push_back(static_cast<T>(adjusted[i][k] / static_cast<double>(K)));
      fin.push_back(finished.empty() ? true : static_cast<bool>(finished[i][k]));
    }
  }
  if (flat.empty()) return {};
  auto enc = model.encoder->encode(g, srcs, dropout);
  auto ctx = model.decoder->prepare(g, enc);
  auto tiled = model.decoder->select(g, ctx, cols);
  return g.sum(model.decoder->sequence_nll(g, tiled, flat, dropout, weights, &fin));
}

template net::Expr reinforce_surrogate(net::Graph<float>&, const net::Seq2Seq<float>&, const std::vector<Ids>&,
                                       const std::vector<std::vector<Ids>>&, const std::vector<std::vector<double>>&,
                                       const std::vector<std::vector<bool>>&, float);
template net::Expr reinforce_surrogate(net::Graph<double>&, const net::Seq2Seq<double>&, const std::vector<Ids>&,
                                       const std::vector<std::vector<Ids>>&, const std::vector<std::vector<double>>&,
                                       const std::vector<std::vector<bool>>&, double);

namespace {

struct SideSamples {
  std::vector<std::size_t> inputs;            // indices into the batch with at least one usable sample
  std::vector<Ids> srcs;                      // encoder ids of those inputs
  std::vector<std::vector<Ids>> ids;          // raw sampled decoder ids
  std::vector<std::vector<bool>> finished;
  std::vector<std::vector<Tokens>> tokens;    // decoded samples
  int skipped = 0;
};

SideSamples draw_samples(ModelSet& m, const std::vector<Utterance>& batch, Direction d, int K, std::mt19937_64& rng) {
  SideSamples s;
  std::vector<Ids> srcs;
  for (const auto& u : batch) srcs.push_back(encoder_ids(m, u.tokens()));
  if (srcs.empty()) return s;
  std::vector<std::vector<net::Hypothesis>> draws(srcs.size());
  const auto model = m.para.seq2seq(d);
  for (int k = 0; k < K; ++k) {
    auto hyps = net::sample(model, srcs, rng);
    for (std::size_t i = 0; i < srcs.size(); ++i) draws[i].push_back(std::move(hyps[i]));
  }
  const Vocab& v = d == Direction::ToCanonical ? m.vocabs.canonical : m.vocabs.natural;
  for (std::size_t i = 0; i < srcs.size(); ++i) {
    std::vector<Ids> ids;
    std::vector<bool> fin;
    std::vector<Tokens> toks;
    for (auto& h : draws[i]) {
      auto t = v.decode(h.tokens);
      if (t.empty()) continue;
      ids.push_back(h.tokens);
      fin.push_back(h.finished);
      toks.push_back(std::move(t));
    }
    if (toks.empty()) {
      ++s.skipped;
      continue;
    }
    s.inputs.push_back(i);
    s.srcs.push_back(srcs[i]);
    s.ids.push_back(std::move(ids));
    s.finished.push_back(std::move(fin));
    s.tokens.push_back(std::move(toks));
  }
  return s;
}

}  // namespace

DrlResult drl_loss(ModelSet& m, net::Graph<float>& g, const Database& db, const std::vector<Utterance>& batch_x,
                   const std::vector<Utterance>& batch_z, int K, std::mt19937_64& rng) {
  if (K < 1) throw ConfigError("K must be positive");
  if (!m.aux.frozen || !m.nsp.frozen) throw std::logic_error("drl_loss: auxiliary models must be frozen");
  DrlResult out;
  std::vector<net::Expr> terms;
  auto side = [&](const std::vector<Utterance>& batch, Direction d, UtteranceKind kind, std::vector<RewardBundle>& dest) {
    SideSamples s = draw_samples(m, batch, d, K, rng);
    out.term.skipped += s.skipped;
    if (s.inputs.empty()) return;
    std::vector<Tokens> originals;
    for (auto i : s.inputs) originals.push_back(batch[i].tokens());
    dest = score_samples(m, db, originals, s.tokens, kind);
    std::vector<std::vector<double>> adjusted;
    for (const auto& b : dest) adjusted.push_back(b.adjusted);
    terms.push_back(reinforce_surrogate(g, m.para.seq2seq(d), s.srcs, s.ids, adjusted, s.finished, 0.0f));
    for (const auto& ids : s.ids) out.term.sequences += static_cast<int>(ids.size());
  };
  side(batch_x, Direction::ToCanonical, UtteranceKind::Natural, out.from_natural);
  side(batch_z, Direction::ToNatural, UtteranceKind::Canonical, out.from_canonical);
  out.term.loss = sum_terms(g, terms);
  return out;
}

// ---- semi-supervised mixing ----

SemiSupervisedMix::SemiSupervisedMix(const std::vector<GoldPair>& pool, double fraction, std::uint64_t seed) {
  if (fraction < 0 || fraction > 1) throw ConfigError("semi_fraction must be in [0, 1]");
  if (fraction == 0) return;
  if (pool.empty()) throw ConfigError("semi_fraction > 0 requires a non-empty labeled pool");
  const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(pool.size()) - 1e-12));
  std::mt19937_64 rng(seed);
  const auto perm = permutation(pool.size(), rng);
  for (std::size_t i = 0; i < n; ++i) selected_.push_back(pool[perm[i]]);
}

LossTerm SemiSupervisedMix::next_loss(ModelSet& m, net::Graph<float>& g, int batch, float dropout) {
  if (!active()) return {};
  std::vector<Tokens> xs;
  std::vector<Tokens> zs;
  for (int i = 0; i < batch; ++i) {
    const auto& p = selected_[cursor_];
    cursor_ = (cursor_ + 1) % selected_.size();
    xs.push_back(p.natural.tokens());
    zs.push_back(p.canonical.tokens());
  }
  auto a = pair_loss(m, g, xs, zs, Direction::ToCanonical, dropout);
  auto b = pair_loss(m, g, zs, xs, Direction::ToNatural, dropout);
  return LossTerm{sum_terms(g, {a.loss, b.loss}), a.sequences + b.sequences, 0};
}

// ---- selection metric ----

SelectionBreakdown compose_selection(const std::vector<Tokens>& x, const std::vector<Tokens>& x_hat,
                                     const std::vector<bool>& agree, double lambda) {
  if (x.size() != x_hat.size()) throw std::invalid_argument("compose_selection: size mismatch");
  SelectionBreakdown s;
  if (!x.empty()) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) total += x_hat[i].empty() ? 0.0 : bleu(x_hat[i], x[i]);
    s.bleu = total / static_cast<double>(x.size());
  }
  if (!agree.empty()) {
    const auto n = std::count(agree.begin(), agree.end(), true);
    s.agreement = static_cast<double>(n) / static_cast<double>(agree.size());
  }
  s.value = lambda * s.bleu + s.agreement;
  return s;
}

SelectionBreakdown selection_metric(ModelSet& m, const std::vector<Utterance>& dev_x,
                                    const std::vector<Utterance>& dev_z, double lambda) {
  static const Database kDb = Database::basketball();
  const auto xs = tokens_of(dev_x);
  std::vector<Tokens> x_hat(xs.size());
  if (!xs.empty()) {
    std::vector<Tokens> z_hat;
    for (auto& p : paraphrase_greedy(m, xs, Direction::ToCanonical)) z_hat.push_back(std::move(p.tokens));
    const auto back = paraphrase_greedy(m, z_hat, Direction::ToNatural);
    for (std::size_t i = 0; i < xs.size(); ++i) x_hat[i] = back[i].tokens;
  }
  std::vector<bool> agree;
  if (!dev_z.empty()) {
    const auto zs = tokens_of(dev_z);
    std::vector<Tokens> mid;
    for (auto& p : paraphrase_greedy(m, zs, Direction::ToNatural)) mid.push_back(std::move(p.tokens));
    std::vector<Tokens> z_hat;
    for (auto& p : paraphrase_greedy(m, mid, Direction::ToCanonical)) z_hat.push_back(std::move(p.tokens));
    // Only the decoded LF text is compared; the database is never consulted.
    const auto a = parse_canonical_batch(m, zs, kDb);
    const auto b = parse_canonical_batch(m, z_hat, kDb);
    for (std::size_t i = 0; i < zs.size(); ++i) agree.push_back(!z_hat[i].empty() && a[i].lf_text == b[i].lf_text);
  }
  return compose_selection(xs, x_hat, agree, lambda);
}

// ---- paraphrase-model phases ----

namespace {

struct BatchOutcome {
  net::Expr loss;
  std::map<std::string, double> parts;  // summed component values
  int skipped = 0;
};

using BatchFn = std::function<BatchOutcome(net::Graph<float>&, const std::vector<Utterance>&,
                                           const std::vector<Utterance>&)>;

void add_reward_stats(std::map<std::string, std::vector<double>>& acc, const std::string& side,
                      const std::vector<RewardBundle>& bundles) {
  for (const auto& b : bundles) {
    auto& f = acc[side + ".fluency"];
    f.insert(f.end(), b.fluency.begin(), b.fluency.end());
    auto& st = acc[side + ".style"];
    st.insert(st.end(), b.style.begin(), b.style.end());
    auto& r = acc[side + ".relevance"];
    r.insert(r.end(), b.relevance.begin(), b.relevance.end());
    auto& t = acc[side + ".total"];
    t.insert(t.end(), b.total.begin(), b.total.end());
  }
}

PhaseSummary run_phase(ModelSet& m, const TrainingData& d, const TrainConfig& cfg, int epochs, const std::string& phase,
                       MetricsSink* sink, const BatchFn& fn,
                       std::map<std::string, std::vector<double>>* reward_acc = nullptr) {
  PhaseSummary summary;
  summary.phase = phase;
  if (d.natural.empty() || d.canonical.empty()) throw ConfigError(phase + ": empty training corpus");
  const auto t0 = Clock::now();
  std::mt19937_64 order(sub_seed(cfg.seed, phase + "/order"));
  std::mt19937_64 drop(sub_seed(cfg.seed, phase + "/dropout"));
  net::Adam opt(params_of(m.para), adam_options(cfg));

  auto sel = selection_metric(m, d.dev_natural, d.dev_canonical, cfg.lambda);
  summary.best_selection = sel.value;
  summary.best_epoch = 0;
  summary.epoch_selection.push_back(sel.value);
  ParaphraseModel best = m.para;
  record(sink, MetricsRecord{phase, 0, {}, {}, {}, sel.value, {}, "initial", 0.0}, t0);

  const std::size_t nx = d.natural.size();
  const std::size_t nz = d.canonical.size();
  const std::size_t N = std::max(nx, nz);
  const auto B = static_cast<std::size_t>(cfg.hp.batch);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto px = permutation(nx, order);
    const auto pz = permutation(nz, order);
    std::map<std::string, double> parts;
    double total = 0.0;
    int batches = 0;
    int skipped = 0;
    if (reward_acc != nullptr) reward_acc->clear();
    for (std::size_t start = 0; start < N; start += B) {
      const std::size_t len = std::min(B, N - start);
      std::vector<Utterance> bx;
      std::vector<Utterance> bz;
      for (std::size_t i = 0; i < len; ++i) {
        bx.push_back(d.natural[px[(start + i) % nx]]);
        bz.push_back(d.canonical[pz[(start + i) % nz]]);
      }
      net::Graph<float> g(true, &drop);
      BatchOutcome o = fn(g, bx, bz);
      skipped += o.skipped;
      if (!o.loss.valid()) continue;
      const double v = g.scalar(o.loss) / static_cast<double>(len);
      if (!std::isfinite(v)) {
        m.para = best;
        MetricsRecord abort{phase, epoch, {{"loss", v}}, {}, {}, {}, {}, "aborted: non-finite loss, restored epoch " +
                                                                         std::to_string(summary.best_epoch), 0.0};
        record(sink, abort, t0);
        throw NumericError(phase + ": non-finite loss at epoch " + std::to_string(epoch) + "; restored epoch " +
                           std::to_string(summary.best_epoch));
      }
      total += v;
      for (const auto& [k, x] : o.parts) parts[k] += x / static_cast<double>(len);
      ++batches;
      g.backward(g.scale(o.loss, 1.0f / static_cast<float>(len)));
      opt.step();
    }
    const double mean_loss = batches > 0 ? total / batches : 0.0;
    summary.epoch_losses.push_back(mean_loss);
    sel = selection_metric(m, d.dev_natural, d.dev_canonical, cfg.lambda);
    summary.epoch_selection.push_back(sel.value);
    summary.epochs_run = epoch;
    MetricsRecord r{phase, epoch, {{"total", mean_loss}}, {}, {{"skipped", skipped}}, sel.value, {}, "", 0.0};
    for (const auto& [k, x] : parts) r.losses[k] = batches > 0 ? x / batches : 0.0;
    r.losses["selection_bleu"] = sel.bleu;
    r.losses["selection_agreement"] = sel.agreement;
    if (reward_acc != nullptr)
      for (const auto& [k, xs] : *reward_acc) {
        const auto [mu, sd] = mean_std(xs);
        r.rewards[k + ".mean"] = mu;
        r.rewards[k + ".std"] = sd;
      }
    record(sink, r, t0);
    if (sel.value > summary.best_selection) {
      summary.best_selection = sel.value;
      summary.best_epoch = epoch;
      best = m.para;
    }
  }
  m.para = best;
  return summary;
}

}  // namespace

PhaseSummary pretrain_dae(ModelSet& m, const TrainingData& d, const EmbeddingTable& emb, const TrainConfig& cfg,
                          MetricsSink* sink, const std::string& phase) {
  cfg.validate();
  NoiseSource noise(cfg.noise, m.vocabs, d.natural, d.canonical, emb);
  std::mt19937_64 noise_rng(sub_seed(cfg.seed, phase + "/noise"));
  SemiSupervisedMix semi(d.semi_pool, cfg.semi_fraction, sub_seed(cfg.seed, "semi"));
  const auto dp = static_cast<float>(cfg.hp.dropout);
  BatchFn fn = [&](net::Graph<float>& g, const std::vector<Utterance>& bx, const std::vector<Utterance>& bz) {
    BatchOutcome o;
    auto dae = dae_loss(m, g, bx, bz, noise, noise_rng, dp);
    std::vector<net::Expr> terms{dae.loss};
    if (dae.loss.valid()) o.parts["dae"] = g.scalar(dae.loss);
    if (semi.active()) {
      auto s = semi.next_loss(m, g, cfg.hp.batch, dp);
      terms.push_back(s.loss);
      if (s.loss.valid()) o.parts["semi"] = g.scalar(s.loss);
    }
    o.loss = sum_terms(g, terms);
    o.skipped = dae.skipped;
    return o;
  };
  return run_phase(m, d, cfg, cfg.epochs_pretrain, phase, sink, fn);
}

PhaseSummary cycle_learn(ModelSet& m, const TrainingData& d, const EmbeddingTable& emb, const Database& db,
                         const TrainConfig& cfg, MetricsSink* sink, const std::string& phase) {
  cfg.validate();
  if (!m.aux.frozen || !m.nsp.frozen) throw std::logic_error("cycle_learn: auxiliary models must be frozen first");
  if (cfg.cycle_tasks == 0) throw ConfigError("cycle_tasks: at least one task must be enabled");
  NoiseSource noise(cfg.noise, m.vocabs, d.natural, d.canonical, emb);
  std::mt19937_64 noise_rng(sub_seed(cfg.seed, phase + "/noise"));
  std::mt19937_64 sample_rng(sub_seed(cfg.seed, phase + "/sampling"));
  SemiSupervisedMix semi(d.semi_pool, cfg.semi_fraction, sub_seed(cfg.seed, "semi"));
  const auto dp = static_cast<float>(cfg.hp.dropout);
  std::map<std::string, std::vector<double>> rewards;
  BatchFn fn = [&](net::Graph<float>& g, const std::vector<Utterance>& bx, const std::vector<Utterance>& bz) {
    BatchOutcome o;
    std::vector<net::Expr> terms;
    if (cfg.cycle_tasks & kTaskDae) {
      auto t = dae_loss(m, g, bx, bz, noise, noise_rng, dp);
      terms.push_back(t.loss);
      if (t.loss.valid()) o.parts["dae"] = g.scalar(t.loss);
      o.skipped += t.skipped;
    }
    if (cfg.cycle_tasks & kTaskBt) {
      auto t = bt_loss(m, g, bx, bz, dp);
      terms.push_back(t.loss);
      if (t.loss.valid()) o.parts["bt"] = g.scalar(t.loss);
      o.skipped += t.skipped;
    }
    if (cfg.cycle_tasks & kTaskDrl) {
      auto r = drl_loss(m, g, db, bx, bz, cfg.hp.K, sample_rng);
      terms.push_back(r.term.loss);
      if (r.term.loss.valid()) o.parts["drl"] = g.scalar(r.term.loss);
      o.skipped += r.term.skipped;
      add_reward_stats(rewards, "nat", r.from_natural);
      add_reward_stats(rewards, "can", r.from_canonical);
    }
    if (semi.active()) {
      auto s = semi.next_loss(m, g, cfg.hp.batch, dp);
      terms.push_back(s.loss);
      if (s.loss.valid()) o.parts["semi"] = g.scalar(s.loss);
    }
    o.loss = sum_terms(g, terms);
    return o;
  };
  return run_phase(m, d, cfg, cfg.epochs_cycle, phase, sink, fn, &rewards);
}

}  // namespace dpp
