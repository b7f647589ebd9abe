#pragma once

#include <random>
#include <string>
#include <vector>

#include "dpp/harness/pipeline.hpp"

namespace dpp::testing {

// Small dimensions and one epoch per phase; enough to exercise every code path.
inline TrainConfig tiny_config(std::uint64_t seed = 3) {
  TrainConfig c;
  c.seed = seed;
  c.hp.emb_dim = 8;
  c.hp.hidden = 8;
  c.hp.batch = 8;
  c.hp.beam = 2;
  c.hp.K = 2;
  c.epochs_aux = 1;
  c.epochs_pretrain = 1;
  c.epochs_cycle = 1;
  c.dev_size = 6;
  c.paraphrases_per_canonical = 1;
  c.noise.candidates = 4;
  return c;
}

// Workspace trimmed to a few dozen utterances so that training steps stay cheap.
inline Workspace tiny_workspace(const TrainConfig& cfg = tiny_config(), std::size_t keep = 24) {
  Workspace ws = prepare_workspace(cfg, "");
  auto trim = [keep](auto& v) {
    if (v.size() > keep) v.erase(v.begin() + static_cast<std::ptrdiff_t>(keep), v.end());
  };
  trim(ws.data.natural);
  trim(ws.data.canonical);
  trim(ws.data.semi_pool);
  trim(ws.data.parser_train);
  trim(ws.corpora.eval);
  return ws;
}

// Flattened copy of every parameter value reached by `visit`.
template <typename Module>
std::vector<float> snapshot(Module& m) {
  std::vector<float> out;
  m.visit([&](net::Parameter<float>& p) { out.insert(out.end(), p.value.data(), p.value.data() + p.value.size()); });
  return out;
}

}  // namespace dpp::testing
