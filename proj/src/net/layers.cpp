#include "dpp/net/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dpp/error.hpp"
#include "dpp/textstats/vocab.hpp"

namespace dpp::net {

namespace {

constexpr double kMaskedScore = -1e9;

template <typename T>
std::span<const T> weights_or_empty(const std::vector<T>& w) {
  return std::span<const T>(w.data(), w.size());
}

}  // namespace

void Hyperparams::validate() const {
  auto positive = [](bool ok, const char* key) {
    if (!ok) throw ConfigError(std::string(key) + " must be positive");
  };
  positive(emb_dim > 0, "emb_dim");
  positive(hidden > 0, "hidden");
  positive(init_range > 0, "init_range");
  positive(lr > 0, "lr");
  positive(batch > 0, "batch");
  positive(beam >= 1, "beam");
  positive(K >= 1, "K");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
  if (max_decode_len < 0) throw ConfigError("max_decode_len must be non-negative");
  if (attn_dim < 0) throw ConfigError("attn_dim must be non-negative");
}

template <typename T>
Matrix<T> StepIds::mask(int t) const {
  Matrix<T> m(1, batch());
  for (int j = 0; j < batch(); ++j) m(0, j) = t < lengths[static_cast<std::size_t>(j)] ? T(1) : T(0);
  return m;
}

template Matrix<float> StepIds::mask<float>(int) const;
template Matrix<double> StepIds::mask<double>(int) const;

StepIds pad_batch(const std::vector<std::vector<int>>& seqs, int min_steps) {
  StepIds out;
  int longest = min_steps;
  for (const auto& s : seqs) {
    out.lengths.push_back(static_cast<int>(s.size()));
    longest = std::max(longest, static_cast<int>(s.size()));
  }
  out.ids.assign(static_cast<std::size_t>(longest), std::vector<int>(seqs.size(), Vocab::kPad));
  for (std::size_t j = 0; j < seqs.size(); ++j)
    for (std::size_t t = 0; t < seqs[j].size(); ++t) out.ids[t][j] = seqs[j][t];
  return out;
}

// ---- Lstm ----

template <typename T>
Lstm<T>::Lstm(const std::string& prefix, int input, int hidden)
    : wx(prefix + ".wx", 4 * hidden, input),
      wh(prefix + ".wh", 4 * hidden, hidden),
      b(prefix + ".b", 4 * hidden, 1),
      input_(input),
      hidden_(hidden) {}

template <typename T>
typename Lstm<T>::State Lstm<T>::initial(Graph<T>& g, int batch) const {
  return State{g.zeros(hidden_, batch), g.zeros(hidden_, batch)};
}

template <typename T>
typename Lstm<T>::State Lstm<T>::step(Graph<T>& g, Expr x, const State& s) {
  Expr gates = g.add(g.add(g.matmul(g.param(wx), x), g.matmul(g.param(wh), s.h)), g.param(b));
  Expr hc = g.lstm_cell(gates, s.c);
  return State{g.slice_rows(hc, 0, hidden_), g.slice_rows(hc, hidden_, hidden_)};
}

template <typename T>
void Lstm<T>::visit(const Visitor<T>& f) {
  f(wx);
  f(wh);
  f(b);
}

// ---- BiEncoder ----

template <typename T>
BiEncoder<T>::BiEncoder(const std::string& prefix, int vocab, int emb_dim, int hidden)
    : emb(prefix + ".emb", emb_dim, vocab), fwd(prefix + ".fwd", emb_dim, hidden), bwd(prefix + ".bwd", emb_dim, hidden) {}

template <typename T>
EncoderOutput<T> BiEncoder<T>::encode(Graph<T>& g, const std::vector<std::vector<int>>& seqs, T dropout) {
  for (const auto& s : seqs)
    if (s.empty()) throw std::invalid_argument("encode: empty source sequence");
  const StepIds batch = pad_batch(seqs);
  const int L = batch.steps();
  const int B = batch.batch();
  std::vector<Expr> xs;
  xs.reserve(static_cast<std::size_t>(L));
  for (int t = 0; t < L; ++t) xs.push_back(g.dropout(g.lookup(emb, batch.ids[static_cast<std::size_t>(t)]), dropout));

  // Forward states past a sequence's end are never attended to, so only the
  // backward direction needs masking (it must start from zero at the last
  // real token).
  std::vector<Expr> f(static_cast<std::size_t>(L));
  auto s = fwd.initial(g, B);
  for (int t = 0; t < L; ++t) {
    s = fwd.step(g, xs[static_cast<std::size_t>(t)], s);
    f[static_cast<std::size_t>(t)] = s.h;
  }
  std::vector<Expr> r(static_cast<std::size_t>(L));
  auto sb = bwd.initial(g, B);
  for (int t = L - 1; t >= 0; --t) {
    auto next = bwd.step(g, xs[static_cast<std::size_t>(t)], sb);
    const Matrix<T> m = batch.mask<T>(t);
    if (m.minCoeff() < T(1)) {
      next.h = g.blend(next.h, sb.h, m);
      next.c = g.blend(next.c, sb.c, m);
    }
    sb = next;
    r[static_cast<std::size_t>(t)] = sb.h;
  }

  EncoderOutput<T> out;
  out.lengths = batch.lengths;
  out.mask_bias = Matrix<T>::Zero(L, B);
  for (int j = 0; j < B; ++j)
    for (int t = batch.lengths[static_cast<std::size_t>(j)]; t < L; ++t) out.mask_bias(t, j) = static_cast<T>(kMaskedScore);
  for (int t = 0; t < L; ++t) {
    const Expr parts[2] = {f[static_cast<std::size_t>(t)], r[static_cast<std::size_t>(t)]};
    out.states.push_back(g.dropout(g.concat_rows(parts), dropout));
  }
  return out;
}

template <typename T>
void BiEncoder<T>::visit(const Visitor<T>& f) {
  f(emb);
  fwd.visit(f);
  bwd.visit(f);
}

// ---- AttnDecoder ----

template <typename T>
AttnDecoder<T>::AttnDecoder(const std::string& prefix, int vocab, int emb_dim, int hidden, int context_dim,
                            int attn_dim)
    : emb(prefix + ".emb", emb_dim, vocab),
      lstm(prefix + ".lstm", emb_dim, hidden),
      w_h(prefix + ".w_h", attn_dim, context_dim),
      w_s(prefix + ".w_s", attn_dim, hidden),
      b_a(prefix + ".b_a", attn_dim, 1),
      v(prefix + ".v", 1, attn_dim),
      w_o(prefix + ".w_o", vocab, hidden + context_dim),
      b_o(prefix + ".b_o", vocab, 1) {}

template <typename T>
AttnContext<T> AttnDecoder<T>::prepare(Graph<T>& g, const EncoderOutput<T>& enc) {
  AttnContext<T> ctx;
  ctx.values = enc.states;
  ctx.mask_bias = enc.mask_bias;
  Expr wh = g.param(w_h);
  for (Expr h : enc.states) ctx.keys.push_back(g.matmul(wh, h));
  return ctx;
}

template <typename T>
AttnContext<T> AttnDecoder<T>::select(Graph<T>& g, const AttnContext<T>& ctx, std::span<const int> cols) const {
  AttnContext<T> out;
  for (Expr e : ctx.values) out.values.push_back(g.select_cols(e, cols));
  for (Expr e : ctx.keys) out.keys.push_back(g.select_cols(e, cols));
  out.mask_bias.resize(ctx.mask_bias.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    out.mask_bias.col(static_cast<Eigen::Index>(j)) = ctx.mask_bias.col(cols[j]);
  return out;
}

template <typename T>
typename AttnDecoder<T>::StepOut AttnDecoder<T>::step(Graph<T>& g, const AttnContext<T>& ctx, const State& s,
                                                      std::span<const int> prev, T dropout) {
  if (static_cast<int>(prev.size()) != ctx.batch()) throw std::invalid_argument("decoder step: batch mismatch");
  Expr x = g.dropout(g.lookup(emb, prev), dropout);
  State next = lstm.step(g, x, s);
  Expr query = g.add(g.matmul(g.param(w_s), next.h), g.param(b_a));
  Expr scores = g.attention_scores(ctx.keys, query, g.param(v), ctx.mask_bias);
  Expr a = g.softmax_cols(scores);
  Expr c = g.weighted_sum(ctx.values, a);
  const Expr parts[2] = {next.h, c};
  Expr feat = g.dropout(g.concat_rows(parts), dropout);
  Expr logits = g.add(g.matmul(g.param(w_o), feat), g.param(b_o));
  return StepOut{logits, a, next};
}

template <typename T>
Expr AttnDecoder<T>::sequence_nll(Graph<T>& g, const AttnContext<T>& ctx, const std::vector<std::vector<int>>& targets,
                                  T dropout, std::span<const T> weights, const std::vector<bool>* finished) {
  const int B = static_cast<int>(targets.size());
  if (B != ctx.batch()) throw std::invalid_argument("sequence_nll: batch mismatch");
  if (!weights.empty() && static_cast<int>(weights.size()) != B)
    throw std::invalid_argument("sequence_nll: weights size mismatch");
  if (finished != nullptr && static_cast<int>(finished->size()) != B)
    throw std::invalid_argument("sequence_nll: finished size mismatch");
  std::size_t longest = 0;
  for (const auto& t : targets) longest = std::max(longest, t.size());
  const int steps = static_cast<int>(longest) + 1;
  std::vector<int> prev(static_cast<std::size_t>(B), Vocab::kBos);
  std::vector<int> gold(static_cast<std::size_t>(B));
  std::vector<T> w(static_cast<std::size_t>(B));
  std::vector<Expr> terms;
  State s = initial(g, B);
  for (int t = 0; t < steps; ++t) {
    for (int j = 0; j < B; ++j) {
      const auto& tg = targets[static_cast<std::size_t>(j)];
      const auto n = static_cast<int>(tg.size());
      gold[static_cast<std::size_t>(j)] = t < n ? tg[static_cast<std::size_t>(t)] : (t == n ? Vocab::kEos : Vocab::kPad);
      const T base = weights.empty() ? T(1) : weights[static_cast<std::size_t>(j)];
      const bool closes = finished == nullptr || (*finished)[static_cast<std::size_t>(j)];
      w[static_cast<std::size_t>(j)] = (t < n || (t == n && closes)) ? base : T(0);
    }
    StepOut o = step(g, ctx, s, prev, dropout);
    terms.push_back(g.nll(o.logits, gold, weights_or_empty(w)));
    s = o.state;
    prev = gold;
  }
  return g.add_n(terms);
}

template <typename T>
void AttnDecoder<T>::visit(const Visitor<T>& f) {
  f(emb);
  lstm.visit(f);
  f(w_h);
  f(w_s);
  f(b_a);
  f(v);
  f(w_o);
  f(b_o);
}

// ---- LanguageModel ----

template <typename T>
LanguageModel<T>::LanguageModel(const std::string& prefix, int vocab, int emb_dim, int hidden)
    : emb(prefix + ".emb", emb_dim, vocab),
      lstm(prefix + ".lstm", emb_dim, hidden),
      w_o(prefix + ".w_o", vocab, hidden),
      b_o(prefix + ".b_o", vocab, 1) {}

template <typename T>
Expr LanguageModel<T>::sequence_nll(Graph<T>& g, const std::vector<std::vector<int>>& seqs, T dropout) {
  const int B = static_cast<int>(seqs.size());
  std::size_t longest = 0;
  for (const auto& t : seqs) longest = std::max(longest, t.size());
  const int steps = static_cast<int>(longest) + 1;
  std::vector<int> prev(static_cast<std::size_t>(B), Vocab::kBos);
  std::vector<int> gold(static_cast<std::size_t>(B));
  std::vector<T> w(static_cast<std::size_t>(B));
  std::vector<Expr> terms;
  auto s = lstm.initial(g, B);
  for (int t = 0; t < steps; ++t) {
    for (int j = 0; j < B; ++j) {
      const auto& tg = seqs[static_cast<std::size_t>(j)];
      const auto n = static_cast<int>(tg.size());
      gold[static_cast<std::size_t>(j)] = t < n ? tg[static_cast<std::size_t>(t)] : (t == n ? Vocab::kEos : Vocab::kPad);
      w[static_cast<std::size_t>(j)] = t <= n ? T(1) : T(0);
    }
    Expr x = g.dropout(g.lookup(emb, prev), dropout);
    s = lstm.step(g, x, s);
    Expr logits = g.add(g.matmul(g.param(w_o), g.dropout(s.h, dropout)), g.param(b_o));
    terms.push_back(g.nll(logits, gold, weights_or_empty(w)));
    prev = gold;
  }
  return g.add_n(terms);
}

template <typename T>
double LanguageModel<T>::log_prob(const std::vector<int>& ids) {
  Graph<T> g(false);
  return -static_cast<double>(g.scalar(sequence_nll(g, {ids}, T(0))));
}

template <typename T>
void LanguageModel<T>::visit(const Visitor<T>& f) {
  f(emb);
  lstm.visit(f);
  f(w_o);
  f(b_o);
}

// ---- CnnClassifier ----

template <typename T>
CnnClassifier<T>::CnnClassifier(const std::string& prefix, int vocab, int emb_dim) : emb(prefix + ".emb", emb_dim, vocab) {
  int features = 0;
  for (std::size_t k = 0; k < kWindows.size(); ++k) {
    const std::string w = std::to_string(kWindows[k]);
    conv_w.emplace_back(prefix + ".conv" + w + ".w", kMaps[k], kWindows[k] * emb_dim);
    conv_b.emplace_back(prefix + ".conv" + w + ".b", kMaps[k], 1);
    features += kMaps[k];
  }
  out_w = Parameter<T>(prefix + ".out.w", 1, features);
  out_b = Parameter<T>(prefix + ".out.b", 1, 1);
}

template <typename T>
Expr CnnClassifier<T>::logits(Graph<T>& g, const std::vector<std::vector<int>>& seqs, T dropout) {
  const StepIds batch = pad_batch(seqs, kMinLength);
  const int L = batch.steps();
  const int B = batch.batch();
  std::vector<Expr> xs;
  for (int t = 0; t < L; ++t) xs.push_back(g.lookup(emb, batch.ids[static_cast<std::size_t>(t)]));
  std::vector<Expr> pooled;
  for (std::size_t k = 0; k < kWindows.size(); ++k) {
    const int w = kWindows[k];
    Expr W = g.param(conv_w[k]);
    Expr bias = g.param(conv_b[k]);
    std::vector<Expr> feats;
    Matrix<T> valid(L - w + 1, B);
    for (int p = 0; p + w <= L; ++p) {
      std::vector<Expr> window(xs.begin() + p, xs.begin() + p + w);
      feats.push_back(g.relu(g.add(g.matmul(W, g.concat_rows(window)), bias)));
      for (int j = 0; j < B; ++j) {
        const int len = std::max(batch.lengths[static_cast<std::size_t>(j)], kMinLength);
        valid(p, j) = p + w <= len ? T(1) : T(0);
      }
    }
    pooled.push_back(g.max_pool(feats, valid));
  }
  Expr h = g.dropout(g.concat_rows(pooled), dropout);
  return g.add(g.matmul(g.param(out_w), h), g.param(out_b));
}

template <typename T>
double CnnClassifier<T>::prob(const std::vector<int>& ids) {
  Graph<T> g(false);
  const double z = static_cast<double>(g.scalar(logits(g, {ids}, T(0))));
  return 1.0 / (1.0 + std::exp(-z));
}

template <typename T>
void CnnClassifier<T>::visit(const Visitor<T>& f) {
  f(emb);
  for (std::size_t k = 0; k < conv_w.size(); ++k) {
    f(conv_w[k]);
    f(conv_b[k]);
  }
  f(out_w);
  f(out_b);
}

template class Lstm<float>;
template class Lstm<double>;
template class BiEncoder<float>;
template class BiEncoder<double>;
template class AttnDecoder<float>;
template class AttnDecoder<double>;
template class LanguageModel<float>;
template class LanguageModel<double>;
template class CnnClassifier<float>;
template class CnnClassifier<double>;

}  // namespace dpp::net
