#pragma once

#include <string>
#include <vector>

#include "dpp/eval/evaluate.hpp"
#include "dpp/train/trainer.hpp"

namespace dpp {

struct PipelineResult {
  PhaseSummary dae;
  PhaseSummary cycle;
  SelectionBreakdown selection;  // of the model that was kept
  EvalReport report;
};

// DAE pre-training then cycle learning (each skipped at zero epochs), then
// evaluation. `m` must carry frozen auxiliaries and P_nsp.
PipelineResult train_and_evaluate(ModelSet& m, const TrainingData& d, const EmbeddingTable& emb, const Database& db,
                                  const std::vector<GoldPair>& eval, const TrainConfig& cfg, MetricsSink* sink = nullptr);

enum class AblationAxis { NoiseSubsets, CycleTasks, SharedEncoder };

// Accepts "noise", "cycle", "shared_encoder" (and the long forms
// "noise_subsets", "cycle_tasks"). Throws ConfigError otherwise.
AblationAxis parse_axis(const std::string& name);
std::string to_string(AblationAxis axis);

struct AblationRow {
  std::string label;
  std::string fingerprint;       // full configuration
  std::string base_fingerprint;  // configuration minus the ablated keys
  double accuracy = 0.0;
  double selection = 0.0;
  std::string error;             // empty when the run succeeded
};

struct AblationTable {
  AblationAxis axis = AblationAxis::NoiseSubsets;
  std::vector<AblationRow> rows;

  std::string to_csv() const;
  std::string render() const;
};

// Row configurations in table order: noise gives none, the three singles,
// the three pairs, then all; cycle gives the seven non-empty subsets of
// {dae, bt, drl}; shared_encoder gives shared then separate.
std::vector<std::pair<std::string, TrainConfig>> ablation_configs(AblationAxis axis, const TrainConfig& base);

// Runs every row from the same seed on a fresh paraphrase model around the
// frozen models of `prepared`. A failing row records its error and the
// remaining rows still run.
AblationTable run_ablation(AblationAxis axis, const TrainConfig& base, const ModelSet& prepared, const TrainingData& d,
                           const EmbeddingTable& emb, const Database& db, const std::vector<GoldPair>& eval,
                           MetricsSink* sink = nullptr);

}  // namespace dpp
