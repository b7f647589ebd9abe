#include <doctest.h>

#include <cmath>
#include <random>

#include "dpp/net/decode.hpp"
#include "dpp/net/layers.hpp"
#include "dpp/net/optimizer.hpp"
#include "dpp/textstats/vocab.hpp"
#include "gradcheck.hpp"

using namespace dpp;
using namespace dpp::net;
using namespace dpp::testing;

namespace {

void check_all(const GradErrors& errors) {
  CHECK_FALSE(errors.empty());
  for (const auto& [name, err] : errors) {
    INFO("parameter " << name << " relative error " << err);
    CHECK(err <= 1e-4);
  }
}

const auto& kSources = kGradSources;

}  // namespace

TEST_CASE("encoder gradients match finite differences") { check_all(encoder_grad_errors()); }

TEST_CASE("attention decoder gradients match finite differences") { check_all(decoder_grad_errors()); }

TEST_CASE("language model gradients match finite differences") { check_all(lm_grad_errors()); }

TEST_CASE("cnn classifier gradients match finite differences") { check_all(cnn_grad_errors()); }

TEST_CASE("attention weights are a distribution over valid positions") {
  std::mt19937_64 rng(5);
  BiEncoder<double> enc("E", 8, 3, 3);
  AttnDecoder<double> dec("D", 7, 3, 4, 6, 5);
  init_uniform(enc, rng, 0.3);
  init_uniform(dec, rng, 0.3);
  Graph<double> g(false);
  auto ctx = dec.prepare(g, enc.encode(g, kSources, 0.0));
  const std::vector<int> prev(3, Vocab::kBos);
  auto out = dec.step(g, ctx, dec.initial(g, 3), prev, 0.0);
  const auto& a = g.value(out.attention);
  for (int j = 0; j < 3; ++j) {
    CHECK(a.col(j).sum() == doctest::Approx(1.0));
    for (int i = static_cast<int>(kSources[static_cast<std::size_t>(j)].size()); i < a.rows(); ++i)
      CHECK(a(i, j) == doctest::Approx(0.0));
  }
}

TEST_CASE("beam search of width one equals greedy decoding") {
  std::mt19937_64 rng(6);
  BiEncoder<double> enc("E", 8, 3, 3);
  AttnDecoder<double> dec("D", 7, 3, 4, 6, 5);
  init_uniform(enc, rng, 1.0);
  init_uniform(dec, rng, 1.0);
  const Seq2Seq<double> model{&enc, &dec, 6};
  for (const auto& src : kSources) {
    const auto g = greedy(model, {src}).front();
    const auto b = beam(model, src, 1).front();
    CHECK(g.tokens == b.tokens);
    CHECK(g.finished == b.finished);
    CHECK(g.log_prob == doctest::Approx(b.log_prob));
    if (g.finished) CHECK(sequence_log_prob(model, src, g.tokens) == doctest::Approx(g.log_prob));
  }
}

TEST_CASE("wider beams never score below greedy and are sorted") {
  std::mt19937_64 rng(7);
  BiEncoder<double> enc("E", 8, 3, 3);
  AttnDecoder<double> dec("D", 7, 3, 4, 6, 5);
  init_uniform(enc, rng, 1.0);
  init_uniform(dec, rng, 1.0);
  const Seq2Seq<double> model{&enc, &dec, 5};
  for (const auto& src : kSources) {
    const auto hyps = beam(model, src, 4);
    REQUIRE_FALSE(hyps.empty());
    CHECK(hyps.size() <= 4);
    for (std::size_t i = 1; i < hyps.size(); ++i) CHECK(hyps[i - 1].score() >= hyps[i].score());
  }
}

TEST_CASE("sampling draws from the model distribution") {
  // One-step policy: the first-token marginal of sampling matches softmax.
  std::mt19937_64 rng(8);
  BiEncoder<double> enc("E", 8, 2, 2);
  AttnDecoder<double> dec("D", 5, 2, 2, 4, 2);
  init_uniform(enc, rng, 1.0);
  init_uniform(dec, rng, 1.0);
  const Seq2Seq<double> model{&enc, &dec, 1};
  const std::vector<int> src{4, 5};
  std::vector<int> counts(5, 0);
  const int n = 40000;
  std::vector<std::vector<int>> batch(100, src);
  for (int i = 0; i < n / 100; ++i)
    for (const auto& h : sample(model, batch, rng)) ++counts[static_cast<std::size_t>(h.finished ? Vocab::kEos : h.tokens[0])];
  Graph<double> g(false);
  auto ctx = dec.prepare(g, enc.encode(g, {src}, 0.0));
  auto out = dec.step(g, ctx, dec.initial(g, 1), std::vector<int>{Vocab::kBos}, 0.0);
  const Matrix<double> logits = g.value(out.logits);
  const Eigen::ArrayXd e = (logits.col(0).array() - logits.col(0).maxCoeff()).exp();
  const Eigen::ArrayXd p = e / e.sum();
  for (int v = 0; v < 5; ++v) {
    const double sigma = std::sqrt(p(v) * (1 - p(v)) / n);
    CHECK(std::abs(counts[static_cast<std::size_t>(v)] / double(n) - p(v)) <= 4 * sigma + 1e-12);
  }
}

TEST_CASE("adam clips by global norm and zeroes gradients") {
  Parameter<float> a("a", 2, 1);
  a.grad << 30.0f, 40.0f;
  Adam::Options o;
  o.lr = 0.1;
  o.clip_norm = 5.0;
  Adam opt({&a}, o);
  CHECK(opt.step() == doctest::Approx(50.0));
  CHECK(a.grad.norm() == 0.0f);
  // First Adam step moves each coordinate by about lr against its gradient sign.
  CHECK(a.value(0, 0) == doctest::Approx(-0.1).epsilon(1e-3));
  CHECK(a.value(1, 0) == doctest::Approx(-0.1).epsilon(1e-3));
}

TEST_CASE("dropout is identity in eval mode and inverted in train mode") {
  std::mt19937_64 rng(9);
  Graph<double> eval(false);
  auto x = eval.constant(Matrix<double>::Constant(50, 40, 2.0));
  CHECK(eval.value(eval.dropout(x, 0.5)).isApprox(eval.value(x)));
  Graph<double> train(true, &rng);
  auto y = train.constant(Matrix<double>::Constant(50, 40, 2.0));
  const auto& d = train.value(train.dropout(y, 0.5));
  CHECK(d.mean() == doctest::Approx(2.0).epsilon(0.05));
  for (Eigen::Index i = 0; i < d.size(); ++i) CHECK((d.data()[i] == 0.0 || d.data()[i] == doctest::Approx(4.0)));
}

TEST_CASE("decode length limit follows the data") {
  CHECK(derive_max_decode_len(10) == 22);
  Hyperparams hp;
  hp.K = 0;
  CHECK_THROWS(hp.validate());
}
