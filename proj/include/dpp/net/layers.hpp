#pragma once

#include <array>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dpp/net/graph.hpp"

namespace dpp::net {

struct Hyperparams {
  int emb_dim = 100;
  int hidden = 200;
  double dropout = 0.5;
  double init_range = 0.2;
  double lr = 0.001;
  int batch = 16;
  int beam = 5;
  int K = 6;
  // 0 means "derive from the training data" (see derive_max_decode_len).
  int max_decode_len = 0;
  // Attention inner dimension; 0 means equal to hidden.
  int attn_dim = 0;

  int attention_dim() const { return attn_dim > 0 ? attn_dim : hidden; }
  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Twice the longest utterance plus room for the end marker and one spare step.
inline int derive_max_decode_len(std::size_t longest) { return 2 * static_cast<int>(longest) + 2; }

template <typename T>
using Visitor = std::function<void(Parameter<T>&)>;

// Padded view of a batch of id sequences; column j of step t is ids[t][j].
struct StepIds {
  std::vector<std::vector<int>> ids;
  std::vector<int> lengths;
  int steps() const { return static_cast<int>(ids.size()); }
  int batch() const { return static_cast<int>(lengths.size()); }
  // 1 x B indicator of positions t < length, as a row of T.
  template <typename T>
  Matrix<T> mask(int t) const;
};

// Pads with <pad> to the longest sequence (or min_steps if larger).
StepIds pad_batch(const std::vector<std::vector<int>>& seqs, int min_steps = 0);

template <typename T>
class Lstm {
 public:
  struct State {
    Expr h;
    Expr c;
  };

  Lstm() = default;
  Lstm(const std::string& prefix, int input, int hidden);

  State initial(Graph<T>& g, int batch) const;
  State step(Graph<T>& g, Expr x, const State& s);
  void visit(const Visitor<T>& f);

  int input_size() const { return input_; }
  int hidden_size() const { return hidden_; }

  Parameter<T> wx;
  Parameter<T> wh;
  Parameter<T> b;

 private:
  int input_ = 0;
  int hidden_ = 0;
};

template <typename T>
struct EncoderOutput {
  std::vector<Expr> states;  // one (2h x B) block per source position
  Matrix<T> mask_bias;       // (L x B): 0 at valid positions, large negative at padding
  std::vector<int> lengths;
  int batch() const { return static_cast<int>(lengths.size()); }
};

// Bidirectional single-layer LSTM encoder; h_i = [forward_i; backward_i].
template <typename T>
class BiEncoder {
 public:
  BiEncoder() = default;
  BiEncoder(const std::string& prefix, int vocab, int emb_dim, int hidden);

  // Every sequence must be non-empty with ids in [0, vocab).
  EncoderOutput<T> encode(Graph<T>& g, const std::vector<std::vector<int>>& seqs, T dropout);
  void visit(const Visitor<T>& f);

  int vocab_size() const { return static_cast<int>(emb.value.cols()); }
  int output_size() const { return 2 * fwd.hidden_size(); }

  Parameter<T> emb;
  Lstm<T> fwd;
  Lstm<T> bwd;
};

template <typename T>
struct AttnContext {
  std::vector<Expr> values;  // encoder states h_i
  std::vector<Expr> keys;    // W_h h_i
  Matrix<T> mask_bias;
  int batch() const { return static_cast<int>(mask_bias.cols()); }
};

// LSTM decoder with additive attention over encoder states. The initial state
// is zero; there is no bridge from the encoder's final state.
template <typename T>
class AttnDecoder {
 public:
  using State = typename Lstm<T>::State;
  struct StepOut {
    Expr logits;     // (V x B)
    Expr attention;  // (L x B), columns sum to 1
    State state;
  };

  AttnDecoder() = default;
  AttnDecoder(const std::string& prefix, int vocab, int emb_dim, int hidden, int context_dim, int attn_dim);

  AttnContext<T> prepare(Graph<T>& g, const EncoderOutput<T>& enc);
  // Tiles the context so that column j of the result is column cols[j] of ctx.
  AttnContext<T> select(Graph<T>& g, const AttnContext<T>& ctx, std::span<const int> cols) const;
  State initial(Graph<T>& g, int batch) const { return lstm.initial(g, batch); }
  StepOut step(Graph<T>& g, const AttnContext<T>& ctx, const State& s, std::span<const int> prev, T dropout);
  // (1 x B) teacher-forced NLL of each target framed as <s> t_1 .. t_n </s>,
  // every step of column j scaled by weights[j] (1 when weights is empty).
  // Columns with finished[j] == false omit the closing </s> term (sequences
  // cut off by the length limit).
  Expr sequence_nll(Graph<T>& g, const AttnContext<T>& ctx, const std::vector<std::vector<int>>& targets,
                    T dropout, std::span<const T> weights = {}, const std::vector<bool>* finished = nullptr);
  void visit(const Visitor<T>& f);

  int vocab_size() const { return static_cast<int>(emb.value.cols()); }

  Parameter<T> emb;
  Lstm<T> lstm;
  Parameter<T> w_h;
  Parameter<T> w_s;
  Parameter<T> b_a;
  Parameter<T> v;
  Parameter<T> w_o;
  Parameter<T> b_o;
};

// Single-layer unidirectional LSTM language model.
template <typename T>
class LanguageModel {
 public:
  LanguageModel() = default;
  LanguageModel(const std::string& prefix, int vocab, int emb_dim, int hidden);

  // (1 x B) NLL of each sequence framed as <s> t_1 .. t_n </s>.
  Expr sequence_nll(Graph<T>& g, const std::vector<std::vector<int>>& seqs, T dropout);
  // Joint log-probability of the framed sequence, eval mode.
  double log_prob(const std::vector<int>& ids);
  void visit(const Visitor<T>& f);

  int vocab_size() const { return static_cast<int>(emb.value.cols()); }

  Parameter<T> emb;
  Lstm<T> lstm;
  Parameter<T> w_o;
  Parameter<T> b_o;
};

// Convolutional sentence classifier: ReLU feature maps over windows 3/4/5
// (10/20/30 maps), max-pooled over time, then a logistic output unit.
// Inputs shorter than the widest window are right-padded with <pad>.
template <typename T>
class CnnClassifier {
 public:
  static constexpr std::array<int, 3> kWindows{3, 4, 5};
  static constexpr std::array<int, 3> kMaps{10, 20, 30};
  static constexpr int kMinLength = 5;

  CnnClassifier() = default;
  CnnClassifier(const std::string& prefix, int vocab, int emb_dim);

  Expr logits(Graph<T>& g, const std::vector<std::vector<int>>& seqs, T dropout);
  // P(canonical | tokens), eval mode.
  double prob(const std::vector<int>& ids);
  void visit(const Visitor<T>& f);

  Parameter<T> emb;
  std::vector<Parameter<T>> conv_w;
  std::vector<Parameter<T>> conv_b;
  Parameter<T> out_w;
  Parameter<T> out_b;
};

// Draws every parameter reached by `visit` uniformly from [-range, range],
// in visit order.
template <typename Module>
void init_uniform(Module& m, std::mt19937_64& rng, double range) {
  m.visit([&](auto& p) { p.init_uniform(rng, range); });
}

template <typename Module>
void zero_grads(Module& m) {
  m.visit([](auto& p) { p.zero_grad(); });
}

extern template class Lstm<float>;
extern template class Lstm<double>;
extern template class BiEncoder<float>;
extern template class BiEncoder<double>;
extern template class AttnDecoder<float>;
extern template class AttnDecoder<double>;
extern template class LanguageModel<float>;
extern template class LanguageModel<double>;
extern template class CnnClassifier<float>;
extern template class CnnClassifier<double>;

}  // namespace dpp::net
