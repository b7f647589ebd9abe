#include "dpp/net/decode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dpp/textstats/vocab.hpp"

namespace dpp::net {

namespace {

// Column-wise log-softmax in double precision.
template <typename T>
Eigen::MatrixXd log_probs(const Matrix<T>& logits) {
  Eigen::MatrixXd lp = logits.template cast<double>();
  for (Eigen::Index j = 0; j < lp.cols(); ++j) {
    const double m = lp.col(j).maxCoeff();
    const double lse = m + std::log((lp.col(j).array() - m).exp().sum());
    lp.col(j).array() -= lse;
  }
  return lp;
}

int argmax(const Eigen::MatrixXd& lp, Eigen::Index col) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < lp.rows(); ++i)
    if (lp(i, col) > lp(best, col)) best = i;
  return static_cast<int>(best);
}

int draw(const Eigen::MatrixXd& lp, Eigen::Index col, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    acc += std::exp(lp(i, col));
    if (r < acc) return static_cast<int>(i);
  }
  // Rounding left the cumulative mass just under 1: take the last token with
  // non-zero probability.
  for (Eigen::Index i = lp.rows() - 1; i >= 0; --i)
    if (std::isfinite(lp(i, col))) return static_cast<int>(i);
  return Vocab::kEos;
}

template <typename T, typename Choose>
std::vector<Hypothesis> run_batched(const Seq2Seq<T>& model, const std::vector<std::vector<int>>& srcs, Choose choose) {
  if (srcs.empty()) return {};
  if (model.max_len < 1) throw std::invalid_argument("max_len must be at least 1");
  Graph<T> g(false);
  auto enc = model.encoder->encode(g, srcs, T(0));
  auto ctx = model.decoder->prepare(g, enc);
  const int B = static_cast<int>(srcs.size());
  std::vector<Hypothesis> out(static_cast<std::size_t>(B));
  std::vector<int> prev(static_cast<std::size_t>(B), Vocab::kBos);
  auto s = model.decoder->initial(g, B);
  int live = B;
  for (int t = 0; t < model.max_len && live > 0; ++t) {
    auto o = model.decoder->step(g, ctx, s, prev, T(0));
    const Eigen::MatrixXd lp = log_probs<T>(g.value(o.logits));
    for (int j = 0; j < B; ++j) {
      Hypothesis& h = out[static_cast<std::size_t>(j)];
      if (h.finished) {
        prev[static_cast<std::size_t>(j)] = Vocab::kEos;
        continue;
      }
      const int tok = choose(lp, j);
      h.log_prob += lp(tok, j);
      if (tok == Vocab::kEos) {
        h.finished = true;
        --live;
      } else {
        h.tokens.push_back(tok);
      }
      prev[static_cast<std::size_t>(j)] = tok;
    }
    s = o.state;
  }
  return out;
}

}  // namespace

template <typename T>
std::vector<Hypothesis> greedy(const Seq2Seq<T>& model, const std::vector<std::vector<int>>& srcs) {
  return run_batched(model, srcs, [](const Eigen::MatrixXd& lp, int j) { return argmax(lp, j); });
}

template <typename T>
std::vector<Hypothesis> sample(const Seq2Seq<T>& model, const std::vector<std::vector<int>>& srcs,
                               std::mt19937_64& rng) {
  return run_batched(model, srcs, [&rng](const Eigen::MatrixXd& lp, int j) { return draw(lp, j, rng); });
}

template <typename T>
std::vector<Hypothesis> beam(const Seq2Seq<T>& model, const std::vector<int>& src, int width) {
  if (width < 1) throw std::invalid_argument("beam width must be at least 1");
  if (model.max_len < 1) throw std::invalid_argument("max_len must be at least 1");
  Graph<T> g(false);
  auto enc = model.encoder->encode(g, {src}, T(0));
  auto ctx = model.decoder->prepare(g, enc);

  std::vector<Hypothesis> active(1);
  std::vector<Hypothesis> done;
  auto s = model.decoder->initial(g, 1);
  std::vector<int> prev{Vocab::kBos};
  struct Candidate {
    double log_prob;
    int parent;
    int token;
  };
  for (int t = 0; t < model.max_len && !active.empty(); ++t) {
    const std::vector<int> zeros(active.size(), 0);
    auto c = model.decoder->select(g, ctx, zeros);
    auto o = model.decoder->step(g, c, s, prev, T(0));
    const Eigen::MatrixXd lp = log_probs<T>(g.value(o.logits));
    std::vector<Candidate> cands;
    cands.reserve(active.size() * static_cast<std::size_t>(lp.rows()));
    for (std::size_t k = 0; k < active.size(); ++k)
      for (Eigen::Index v = 0; v < lp.rows(); ++v)
        cands.push_back({active[k].log_prob + lp(v, static_cast<Eigen::Index>(k)), static_cast<int>(k), static_cast<int>(v)});
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });
    const std::size_t keep = static_cast<std::size_t>(width) - done.size();
    std::vector<Hypothesis> next;
    std::vector<int> parents;
    prev.clear();
    for (std::size_t i = 0; i < keep && i < cands.size(); ++i) {
      const Candidate& cd = cands[i];
      Hypothesis h = active[static_cast<std::size_t>(cd.parent)];
      h.log_prob = cd.log_prob;
      if (cd.token == Vocab::kEos) {
        h.finished = true;
        done.push_back(std::move(h));
      } else {
        h.tokens.push_back(cd.token);
        next.push_back(std::move(h));
        parents.push_back(cd.parent);
        prev.push_back(cd.token);
      }
    }
    active = std::move(next);
    if (!active.empty()) s = {g.select_cols(o.state.h, parents), g.select_cols(o.state.c, parents)};
  }
  for (auto& h : active) done.push_back(std::move(h));
  std::stable_sort(done.begin(), done.end(), [](const Hypothesis& a, const Hypothesis& b) { return a.score() > b.score(); });
  return done;
}

template <typename T>
double sequence_log_prob(const Seq2Seq<T>& model, const std::vector<int>& src, const std::vector<int>& tgt) {
  Graph<T> g(false);
  auto enc = model.encoder->encode(g, {src}, T(0));
  auto ctx = model.decoder->prepare(g, enc);
  return -static_cast<double>(g.scalar(model.decoder->sequence_nll(g, ctx, {tgt}, T(0))));
}

template std::vector<Hypothesis> greedy(const Seq2Seq<float>&, const std::vector<std::vector<int>>&);
template std::vector<Hypothesis> greedy(const Seq2Seq<double>&, const std::vector<std::vector<int>>&);
template std::vector<Hypothesis> sample(const Seq2Seq<float>&, const std::vector<std::vector<int>>&, std::mt19937_64&);
template std::vector<Hypothesis> sample(const Seq2Seq<double>&, const std::vector<std::vector<int>>&, std::mt19937_64&);
template std::vector<Hypothesis> beam(const Seq2Seq<float>&, const std::vector<int>&, int);
template std::vector<Hypothesis> beam(const Seq2Seq<double>&, const std::vector<int>&, int);
template double sequence_log_prob(const Seq2Seq<float>&, const std::vector<int>&, const std::vector<int>&);
template double sequence_log_prob(const Seq2Seq<double>&, const std::vector<int>&, const std::vector<int>&);

}  // namespace dpp::net
