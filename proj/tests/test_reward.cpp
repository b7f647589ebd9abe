#include <doctest.h>

#include <cmath>
#include <random>

#include "dpp/reward/reward.hpp"
#include "fixtures.hpp"

using namespace dpp;
using dpp::testing::snapshot;
using dpp::testing::tiny_workspace;

namespace {

struct Fixture {
  Workspace ws = tiny_workspace();
  ModelSet m = fresh_models(ws);
  Tokens x = ws.data.natural[0].tokens();
  Tokens z = ws.data.canonical[0].tokens();
};

void make_uniform(net::LanguageModel<float>& lm) {
  lm.w_o.value.setZero();
  lm.b_o.value.setZero();
}

}  // namespace

TEST_CASE("uniform language model fluency is -(T+1)/T ln V") {
  Fixture f;
  make_uniform(f.m.aux.lm_x);
  make_uniform(f.m.aux.lm_z);
  const double T = static_cast<double>(f.x.size());
  const double V = f.m.aux.lm_x.vocab_size();
  CHECK(fluency_natural(f.m, f.x) == doctest::Approx(-(T + 1) / T * std::log(V)).epsilon(1e-6));

  const double Tz = static_cast<double>(f.z.size());
  const double Vz = f.m.aux.lm_z.vocab_size();
  const double exec = parse_canonical(f.m, f.z, f.ws.db).executable() ? 1.0 : 0.0;
  CHECK(fluency_canonical(f.m, f.z, f.ws.db) == doctest::Approx(-(Tz + 1) / Tz * std::log(Vz) + exec).epsilon(1e-6));
  CHECK_THROWS(fluency_natural(f.m, {}));
}

TEST_CASE("style scores of the two targets are complementary") {
  Fixture f;
  for (const auto& u : {f.x, f.z}) {
    const double c = style(f.m, u, UtteranceKind::Canonical);
    const double n = style(f.m, u, UtteranceKind::Natural);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    CHECK(c + n == doctest::Approx(1.0).epsilon(1e-12));
    net::Graph<float> g(false);
    const double logit = g.scalar(f.m.aux.dis.logits(g, {f.m.vocabs.encoder.encode(u)}, 0.0f));
    CHECK(c == doctest::Approx(1.0 / (1.0 + std::exp(-logit))).epsilon(1e-6));
  }
}

TEST_CASE("relevance is the dual direction's log-likelihood of the original") {
  Fixture f;
  const auto s = f.m.para.seq2seq(Direction::ToNatural);
  net::Graph<float> g(false);
  auto ctx = s.decoder->prepare(g, s.encoder->encode(g, {encoder_ids(f.m, f.z)}, 0.0f));
  const double nll = g.scalar(s.decoder->sequence_nll(g, ctx, {f.m.vocabs.natural.encode(f.x)}, 0.0f));
  CHECK(relevance(f.m, f.x, f.z, UtteranceKind::Natural) == doctest::Approx(-nll).epsilon(1e-5));
  CHECK(relevance(f.m, f.x, f.z, UtteranceKind::Natural) < 0.0);
}

TEST_CASE("adjusted rewards sum to zero and the baseline is their mean") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-20.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t K = 1 + static_cast<std::size_t>(trial % 9);
    std::vector<double> fl;
    std::vector<double> st;
    std::vector<double> re;
    for (std::size_t k = 0; k < K; ++k) {
      fl.push_back(u(rng));
      st.push_back(std::abs(u(rng)) / 20.0);
      re.push_back(u(rng));
    }
    const auto b = total_and_baseline(fl, st, re);
    double sum = 0.0;
    double mean = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      CHECK(b.total[k] == fl[k] + st[k] + re[k]);
      mean += b.total[k] / static_cast<double>(K);
      sum += b.adjusted[k];
    }
    CHECK(std::abs(sum) <= 1e-9);
    CHECK(b.baseline == doctest::Approx(mean).epsilon(1e-12));
  }
  CHECK_THROWS(total_and_baseline({}, {}, {}));
  CHECK_THROWS(total_and_baseline({1.0}, {0.5, 0.5}, {1.0}));
}

TEST_CASE("batched scoring matches the per-sample definitions and reads only") {
  Fixture f;
  const auto before = snapshot(f.m.para);
  const auto& Z = f.ws.data.canonical;
  const auto& X = f.ws.data.natural;
  const std::vector<Tokens> originals{f.x, X[1].tokens()};
  const std::vector<std::vector<Tokens>> samples{{Z[0].tokens(), Z[1].tokens(), Z[2].tokens()}, {Z[3].tokens()}};
  const auto out = score_samples(f.m, f.ws.db, originals, samples, UtteranceKind::Natural);
  REQUIRE(out.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE(out[i].size() == samples[i].size());
    for (std::size_t k = 0; k < samples[i].size(); ++k) {
      const auto& s = samples[i][k];
      CHECK(out[i].fluency[k] == doctest::Approx(fluency_canonical(f.m, s, f.ws.db)).epsilon(1e-5));
      CHECK(out[i].style[k] == doctest::Approx(style(f.m, s, UtteranceKind::Canonical)).epsilon(1e-5));
      CHECK(out[i].relevance[k] == doctest::Approx(relevance(f.m, originals[i], s, UtteranceKind::Natural)).epsilon(1e-5));
    }
  }
  CHECK(out[1].adjusted[0] == 0.0);

  const auto back = score_samples(f.m, f.ws.db, {f.z}, {{X[2].tokens(), X[3].tokens()}}, UtteranceKind::Canonical);
  REQUIRE(back.size() == 1);
  CHECK(back[0].fluency[0] == doctest::Approx(fluency_natural(f.m, X[2].tokens())).epsilon(1e-5));
  CHECK(back[0].style[1] == doctest::Approx(style(f.m, X[3].tokens(), UtteranceKind::Natural)).epsilon(1e-5));
  CHECK(back[0].relevance[0] == doctest::Approx(relevance(f.m, f.z, X[2].tokens(), UtteranceKind::Canonical)).epsilon(1e-5));

  CHECK_THROWS(score_samples(f.m, f.ws.db, {f.x}, {{Tokens{}}}, UtteranceKind::Natural));
  CHECK(snapshot(f.m.para) == before);
}
