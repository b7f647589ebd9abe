#include "dpp/eval/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <unordered_map>

#include "dpp/error.hpp"
#include "dpp/net/optimizer.hpp"
#include "dpp/textstats/wmd.hpp"

namespace dpp {

std::vector<std::size_t> nearest_by_wmd(const std::vector<Utterance>& queries, const std::vector<Utterance>& candidates,
                                        const EmbeddingTable& emb) {
  if (candidates.empty()) throw ConfigError("nearest_by_wmd: empty candidate pool");
  std::vector<std::size_t> out;
  out.reserve(queries.size());
  std::unordered_map<std::string, std::size_t> memo;
  for (const auto& q : queries) {
    const std::string key = q.text();
    if (auto it = memo.find(key); it != memo.end()) {
      out.push_back(it->second);
      continue;
    }
    std::vector<double> bound(candidates.size());
    for (std::size_t j = 0; j < candidates.size(); ++j) bound[j] = relaxed_wmd(q.tokens(), candidates[j].tokens(), emb);
    // Visit candidates by increasing bound (stable, so equal bounds keep index order).
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bound[a] < bound[b]; });
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = candidates.size();
    for (auto j : order) {
      if (bound[j] > best + 1e-12) break;
      const double dist = wmd(q, candidates[j], emb);
      if (dist < best || (dist == best && j < arg)) {
        best = dist;
        arg = j;
      }
    }
    memo.emplace(key, arg);
    out.push_back(arg);
  }
  return out;
}

void DirectParser::visit(const net::Visitor<float>& f) {
  enc.visit(f);
  dec.visit(f);
  if (multi_task) dae_dec.visit(f);
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<net::Parameter<float>*> params_of(DirectParser& p) {
  std::vector<net::Parameter<float>*> out;
  p.visit([&](net::Parameter<float>& x) { out.push_back(&x); });
  return out;
}

}  // namespace

DirectParser train_direct_parser(const ModelSet& m, const std::vector<DirectPair>& pairs,
                                 const std::vector<Utterance>& dae_corpus, const TrainingData& d,
                                 const EmbeddingTable& emb, const TrainConfig& cfg, const std::string& name,
                                 MetricsSink* sink) {
  if (pairs.empty()) throw ConfigError(name + ": no training pairs");
  const auto& hp = m.hp;
  DirectParser p;
  p.multi_task = !dae_corpus.empty();
  p.max_len = m.para.max_len;
  p.enc = net::BiEncoder<float>(name + ".E", m.vocabs.encoder.size(), hp.emb_dim, hp.hidden);
  p.dec = net::AttnDecoder<float>(name + ".D", m.vocabs.lf.size(), hp.emb_dim, hp.hidden, 2 * hp.hidden,
                                  hp.attention_dim());
  if (p.multi_task)
    p.dae_dec = net::AttnDecoder<float>(name + ".Dx", m.vocabs.natural.size(), hp.emb_dim, hp.hidden, 2 * hp.hidden,
                                        hp.attention_dim());
  std::mt19937_64 init(sub_seed(cfg.seed, name + "/init"));
  net::init_uniform(p, init, hp.init_range);

  std::vector<std::vector<int>> src;
  std::vector<std::vector<int>> tgt;
  for (const auto& x : pairs) {
    src.push_back(m.vocabs.encoder.encode(x.source));
    tgt.push_back(m.vocabs.lf.encode(x.lf));
  }
  std::unique_ptr<NoiseSource> noise;
  if (p.multi_task) noise = std::make_unique<NoiseSource>(cfg.noise, m.vocabs, d.natural, d.canonical, emb);
  std::mt19937_64 order(sub_seed(cfg.seed, name + "/order"));
  std::mt19937_64 drop(sub_seed(cfg.seed, name + "/dropout"));
  std::mt19937_64 noise_rng(sub_seed(cfg.seed, name + "/noise"));
  net::Adam::Options o;
  o.lr = hp.lr;
  o.clip_norm = cfg.clip_norm;
  net::Adam opt(params_of(p), o);
  const auto dp = static_cast<float>(hp.dropout);
  const auto B = static_cast<std::size_t>(hp.batch);
  std::size_t dae_cursor = 0;
  const auto t0 = Clock::now();
  for (int epoch = 1; epoch <= cfg.epochs_pretrain; ++epoch) {
    std::vector<std::size_t> perm(src.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), order);
    double total = 0.0;
    for (std::size_t start = 0; start < perm.size(); start += B) {
      const std::size_t len = std::min(B, perm.size() - start);
      std::vector<std::vector<int>> bs;
      std::vector<std::vector<int>> bt;
      for (std::size_t i = 0; i < len; ++i) {
        bs.push_back(src[perm[start + i]]);
        bt.push_back(tgt[perm[start + i]]);
      }
      net::Graph<float> g(true, &drop);
      auto enc = p.enc.encode(g, bs, dp);
      auto ctx = p.dec.prepare(g, enc);
      net::Expr loss = g.sum(p.dec.sequence_nll(g, ctx, bt, dp));
      if (p.multi_task) {
        std::vector<std::vector<int>> noisy;
        std::vector<std::vector<int>> clean;
        for (std::size_t i = 0; i < len; ++i) {
          const Utterance& x = dae_corpus[dae_cursor];
          dae_cursor = (dae_cursor + 1) % dae_corpus.size();
          noisy.push_back(m.vocabs.encoder.encode(noise->corrupt(x, noise_rng)));
          clean.push_back(m.vocabs.natural.encode(x));
        }
        auto denc = p.enc.encode(g, noisy, dp);
        auto dctx = p.dae_dec.prepare(g, denc);
        loss = g.add(loss, g.sum(p.dae_dec.sequence_nll(g, dctx, clean, dp)));
      }
      const double v = g.scalar(loss);
      if (!std::isfinite(v)) throw NumericError(name + ": non-finite loss at epoch " + std::to_string(epoch));
      total += v;
      g.backward(g.scale(loss, 1.0f / static_cast<float>(len)));
      opt.step();
    }
    if (sink != nullptr) {
      MetricsRecord r{"baseline/" + name, epoch, {{"nll", total / static_cast<double>(src.size())}}, {}, {}, {}, {}, "",
                      0.0};
      r.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      sink->append(r);
    }
  }
  return p;
}

EvalReport evaluate_direct(DirectParser& p, const ModelSet& m, const Database& db, const std::vector<GoldPair>& eval,
                           int beam, const std::string& system) {
  std::vector<EvalExample> out;
  for (const auto& gold : eval) {
    const auto src = m.vocabs.encoder.encode(gold.natural);
    const auto hyp = net::beam(p.seq2seq(), src, beam).front();
    out.push_back(score_prediction(gold, "", m.vocabs.lf.decode(hyp.tokens), db));
  }
  return tally(system, std::move(out));
}

EvalReport wmd_samples_baseline(const ModelSet& m, const TrainingData& d, const EmbeddingTable& emb,
                                const Database& db, const std::vector<GoldPair>& eval, WmdMode mode,
                                const TrainConfig& cfg, MetricsSink* sink) {
  if (!m.nsp.frozen) throw std::logic_error("wmd_samples_baseline: the naive parser must be frozen");
  std::vector<Utterance> zs;
  for (const auto& p : d.parser_train) zs.push_back(p.canonical);
  const auto nearest = nearest_by_wmd(d.natural, zs, emb);
  const std::string name = mode == WmdMode::TwoStage ? "wmd_two_stage" : "wmd_one_stage";
  if (mode == WmdMode::OneStage) {
    std::vector<DirectPair> pairs;
    for (std::size_t i = 0; i < d.natural.size(); ++i)
      pairs.push_back({d.natural[i].tokens(), d.parser_train[nearest[i]].lf.tokens()});
    DirectParser p = train_direct_parser(m, pairs, {}, d, emb, cfg, name, sink);
    return evaluate_direct(p, m, db, eval, m.hp.beam, name);
  }

  const EmbeddingTable* file = emb.dim() == m.hp.emb_dim ? &emb : nullptr;
  ModelSet fresh = with_fresh_paraphrase(m, file, sub_seed(cfg.seed, name + "/init"), cfg.shared_encoder);
  std::mt19937_64 order(sub_seed(cfg.seed, name + "/order"));
  std::mt19937_64 drop(sub_seed(cfg.seed, name + "/dropout"));
  std::vector<net::Parameter<float>*> params;
  fresh.para.visit([&](net::Parameter<float>& x) { params.push_back(&x); });
  net::Adam::Options o;
  o.lr = m.hp.lr;
  o.clip_norm = cfg.clip_norm;
  net::Adam opt(params, o);
  const auto B = static_cast<std::size_t>(m.hp.batch);
  const auto dp = static_cast<float>(m.hp.dropout);
  const auto t0 = Clock::now();
  for (int epoch = 1; epoch <= cfg.epochs_pretrain; ++epoch) {
    std::vector<std::size_t> perm(d.natural.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), order);
    double total = 0.0;
    for (std::size_t start = 0; start < perm.size(); start += B) {
      const std::size_t len = std::min(B, perm.size() - start);
      std::vector<Tokens> xs;
      std::vector<Tokens> ts;
      for (std::size_t i = 0; i < len; ++i) {
        xs.push_back(d.natural[perm[start + i]].tokens());
        ts.push_back(zs[nearest[perm[start + i]]].tokens());
      }
      net::Graph<float> g(true, &drop);
      auto term = pair_loss(fresh, g, xs, ts, Direction::ToCanonical, dp);
      if (!term.loss.valid()) continue;
      const double v = g.scalar(term.loss);
      if (!std::isfinite(v)) throw NumericError(name + ": non-finite loss at epoch " + std::to_string(epoch));
      total += v;
      g.backward(g.scale(term.loss, 1.0f / static_cast<float>(len)));
      opt.step();
    }
    if (sink != nullptr) {
      MetricsRecord r{"baseline/" + name, epoch, {{"nll", total / static_cast<double>(perm.size())}}, {}, {}, {}, {},
                      "", 0.0};
      r.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      sink->append(r);
    }
  }
  auto r = evaluate(fresh, db, eval, m.hp.beam);
  r.system = name;
  return r;
}

EvalReport canonical_transfer_baseline(const ModelSet& m, const TrainingData& d, const EmbeddingTable& emb,
                                       const Database& db, const std::vector<GoldPair>& eval, bool multi_task,
                                       const TrainConfig& cfg, MetricsSink* sink) {
  std::vector<DirectPair> pairs;
  for (const auto& p : d.parser_train) pairs.push_back({p.canonical.tokens(), p.lf.tokens()});
  const std::string name = multi_task ? "multitask_dae" : "one_stage";
  DirectParser p = train_direct_parser(m, pairs, multi_task ? d.natural : std::vector<Utterance>{}, d, emb, cfg, name,
                                       sink);
  return evaluate_direct(p, m, db, eval, m.hp.beam, name);
}

}  // namespace dpp
