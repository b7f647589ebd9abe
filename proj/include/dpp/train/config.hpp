#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpp/net/layers.hpp"
#include "dpp/noise/noise.hpp"

namespace dpp {

// Cycle-learning task bits.
enum CycleTask : unsigned { kTaskDae = 1U, kTaskBt = 2U, kTaskDrl = 4U };

// "dae", "bt", "drl" joined by '+' in that order; "none" for 0.
std::string cycle_tasks_label(unsigned tasks);
// Inverse of cycle_tasks_label (case-insensitive, any order). Throws ConfigError.
unsigned parse_cycle_tasks(std::string_view text);

struct TrainConfig {
  int epochs_pretrain = 50;
  int epochs_cycle = 50;
  int epochs_aux = 100;
  net::Hyperparams hp;
  NoiseSpec noise;
  double semi_fraction = 0.0;
  unsigned cycle_tasks = kTaskBt | kTaskDrl;
  std::uint64_t seed = 0;
  double lambda = 4.0;
  double clip_norm = 5.0;
  bool shared_encoder = true;

  // Data generation and bookkeeping knobs.
  int grammar_depth = 3;
  int paraphrases_per_canonical = 8;
  double eval_fraction = 0.2;
  int dev_size = 64;                // unlabeled dev utterances per side for model selection
  double parser_dev_fraction = 0.1;  // slice of parser pairs used to pick the best P_nsp epoch

  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Every resolved value as ("section.key", text) in a fixed order; the keys
// are the ones accepted by the config file.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg);

// FNV-1a over config_entries, hex encoded. Keys listed in `exclude` are left
// out, which lets ablation rows share a base fingerprint.
std::string config_fingerprint(const TrainConfig& cfg, const std::vector<std::string>& exclude = {});

// Deterministic per-component seed derived from the global seed.
std::uint64_t sub_seed(std::uint64_t seed, std::string_view component);

}  // namespace dpp
