#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpp/domain/corpora.hpp"
#include "dpp/domain/database.hpp"
#include "dpp/net/decode.hpp"
#include "dpp/noise/noise.hpp"
#include "dpp/reward/reward.hpp"
#include "dpp/train/config.hpp"
#include "dpp/train/metrics.hpp"
#include "dpp/zoo/models.hpp"

namespace dpp {

/// Everything the training phases read, derived once from the corpora.
struct TrainingData {
  std::vector<Utterance> natural;    // X
  std::vector<Utterance> canonical;  // Z
  std::vector<Utterance> dev_natural;
  std::vector<Utterance> dev_canonical;
  std::vector<GoldPair> semi_pool;
  std::vector<CanonicalPair> parser_train;
  std::vector<CanonicalPair> parser_dev;
};

// Dev sets are the first dev_size utterances of X and Z (unlabeled); the
// parser pairs are split deterministically by parser_dev_fraction.
TrainingData make_training_data(const Corpora& c, const TrainConfig& cfg);

// Longest utterance over X, Z and the parser's target sequences.
std::size_t longest_sequence(const TrainingData& d);

// Trains LM_x, LM_z, P_dis and P_nsp, then freezes them. P_nsp keeps the
// epoch with the best exact match on parser_dev.
std::vector<AuxSummary> pretrain_auxiliaries(ModelSet& m, const TrainingData& d, const TrainConfig& cfg,
                                             MetricsSink* sink = nullptr);

// Greedy exact-match rate of P_nsp on (canonical, LF) pairs.
double parser_exact_match(ModelSet& m, const std::vector<CanonicalPair>& pairs);

/// Noise channels with memoized WMD candidate distances. Natural inputs draw
/// mixed-source words from Z, canonical inputs from X.
class NoiseSource {
 public:
  NoiseSource(const NoiseSpec& spec, const Vocabularies& vocabs, const std::vector<Utterance>& natural,
              const std::vector<Utterance>& canonical, const EmbeddingTable& emb);

  Utterance corrupt(const Utterance& u, std::mt19937_64& rng);
  const NoiseSpec& spec() const { return spec_; }

 private:
  double distance(const Utterance& u, std::size_t index);

  NoiseSpec spec_;
  const Vocabularies* vocabs_;
  const std::vector<Utterance>* natural_;
  const std::vector<Utterance>* canonical_;
  const EmbeddingTable* emb_;
  std::unordered_map<std::string, std::vector<double>> memo_;
};

// A loss contribution: summed per-sequence losses (invalid Expr when no
// sequence contributed) and bookkeeping counts.
struct LossTerm {
  net::Expr loss;
  int sequences = 0;
  int skipped = 0;
};

// Reconstruction NLL of x from N(x) through D_x.E plus z from N(z) through D_z.E.
LossTerm dae_loss(ModelSet& m, net::Graph<float>& g, const std::vector<Utterance>& batch_x,
                  const std::vector<Utterance>& batch_z, NoiseSource& noise, std::mt19937_64& rng, float dropout);

// NLL of (target | source) pairs through direction d; pairs with an empty
// source are skipped.
LossTerm pair_loss(ModelSet& m, net::Graph<float>& g, const std::vector<Tokens>& sources,
                   const std::vector<Tokens>& targets, Direction d, float dropout);

// Back-translation: pseudo sources from eval-mode greedy decoding, then
// NLL(x | z_hat) through D_x.E and NLL(z | x_hat) through D_z.E.
LossTerm bt_loss(ModelSet& m, net::Graph<float>& g, const std::vector<Utterance>& batch_x,
                 const std::vector<Utterance>& batch_z, float dropout);

// sum_i (1/K_i) sum_k adjusted[i][k] * NLL(samples[i][k] | srcs[i]); its
// gradient is minus the REINFORCE estimate of the expected-reward gradient.
// finished[i][k] == false marks samples cut off by the length limit (no </s>
// term); an empty `finished` means every sample terminated.
template <typename T>
net::Expr reinforce_surrogate(net::Graph<T>& g, const net::Seq2Seq<T>& model, const std::vector<std::vector<int>>& srcs,
                              const std::vector<std::vector<std::vector<int>>>& samples,
                              const std::vector<std::vector<double>>& adjusted,
                              const std::vector<std::vector<bool>>& finished, T dropout);

struct DrlResult {
  LossTerm term;
  std::vector<RewardBundle> from_natural;    // rewards of canonical samples, per x
  std::vector<RewardBundle> from_canonical;  // rewards of natural samples, per z
};

// Samples K outputs per input and direction (eval mode), scores them with the
// frozen auxiliaries and the dual model, and builds the surrogate loss.
// Empty samples are dropped before the baseline; inputs with none left are skipped.
DrlResult drl_loss(ModelSet& m, net::Graph<float>& g, const Database& db, const std::vector<Utterance>& batch_x,
                   const std::vector<Utterance>& batch_z, int K, std::mt19937_64& rng);

/// Labeled pairs mixed into every batch: ceil(fraction * |pool|) pairs fixed
/// by seed, consumed `batch` at a time in a cycle.
class SemiSupervisedMix {
 public:
  SemiSupervisedMix(const std::vector<GoldPair>& pool, double fraction, std::uint64_t seed);

  bool active() const { return !selected_.empty(); }
  const std::vector<GoldPair>& selected() const { return selected_; }
  // Supervised x->z and z->x NLL over the next `batch` selected pairs.
  LossTerm next_loss(ModelSet& m, net::Graph<float>& g, int batch, float dropout);

 private:
  std::vector<GoldPair> selected_;
  std::size_t cursor_ = 0;
};

struct SelectionBreakdown {
  double bleu = 0.0;       // mean BLEU(x, x_hat)
  double agreement = 0.0;  // mean indicator P_nsp(z) == P_nsp(z_hat)
  double value = 0.0;      // lambda * bleu + agreement
};

// lambda * mean BLEU(x_hat_i, x_i) + mean agree_i; an empty x_hat_i scores 0.
SelectionBreakdown compose_selection(const std::vector<Tokens>& x, const std::vector<Tokens>& x_hat,
                                     const std::vector<bool>& agree, double lambda);

// x_hat = D_x.E(D_z.E(x)) on dev_x; agreement compares P_nsp(z) with
// P_nsp(D_z.E(D_x.E(z))) on dev_z; greedy decoding throughout.
SelectionBreakdown selection_metric(ModelSet& m, const std::vector<Utterance>& dev_x,
                                    const std::vector<Utterance>& dev_z, double lambda);

struct PhaseSummary {
  std::string phase;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_selection = 0.0;
  std::vector<double> epoch_losses;     // epochs 1..epochs_run
  std::vector<double> epoch_selection;  // epochs 0..epochs_run; 0 is the starting model
};

// DAE pre-training (all noise channels per cfg.noise), keeping the best epoch
// by selection metric. Throws NumericError after restoring the last good
// parameters when a loss turns non-finite.
PhaseSummary pretrain_dae(ModelSet& m, const TrainingData& d, const EmbeddingTable& emb, const TrainConfig& cfg,
                          MetricsSink* sink = nullptr, const std::string& phase = "dae");

// Cycle learning with the tasks in cfg.cycle_tasks; one optimizer step per
// batch on the summed loss. Auxiliaries and P_nsp must be frozen.
PhaseSummary cycle_learn(ModelSet& m, const TrainingData& d, const EmbeddingTable& emb, const Database& db,
                         const TrainConfig& cfg, MetricsSink* sink = nullptr, const std::string& phase = "cycle");

}  // namespace dpp
