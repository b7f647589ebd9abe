#pragma once

#include <string>
#include <vector>

#include "dpp/eval/evaluate.hpp"
#include "dpp/train/trainer.hpp"

namespace dpp {

// Index of the WMD-nearest candidate for every query; the first index wins
// ties. Candidates whose relaxed lower bound already exceeds the best exact
// distance are skipped, which never changes the result.
std::vector<std::size_t> nearest_by_wmd(const std::vector<Utterance>& queries, const std::vector<Utterance>& candidates,
                                        const EmbeddingTable& emb);

/// Sequence model from natural utterances (union vocabulary) straight to LF
/// tokens, optionally with a denoising decoder on natural utterances that
/// shares its encoder.
struct DirectParser {
  net::BiEncoder<float> enc;
  net::AttnDecoder<float> dec;      // LF tokens
  net::AttnDecoder<float> dae_dec;  // natural tokens; unused unless multi_task
  bool multi_task = false;
  int max_len = 1;

  net::Seq2Seq<float> seq2seq() { return {&enc, &dec, max_len}; }
  void visit(const net::Visitor<float>& f);
};

struct DirectPair {
  std::vector<std::string> source;
  std::vector<std::string> lf;
};

// Trains a DirectParser for cfg.epochs_pretrain epochs on `pairs`; with
// `dae_corpus` non-empty every step also reconstructs a batch of natural
// utterances from their noised versions.
DirectParser train_direct_parser(const ModelSet& m, const std::vector<DirectPair>& pairs,
                                 const std::vector<Utterance>& dae_corpus, const TrainingData& d,
                                 const EmbeddingTable& emb, const TrainConfig& cfg, const std::string& name,
                                 MetricsSink* sink = nullptr);

EvalReport evaluate_direct(DirectParser& p, const ModelSet& m, const Database& db, const std::vector<GoldPair>& eval,
                           int beam, const std::string& system);

enum class WmdMode { OneStage, TwoStage };

// Labels each training x with its WMD-nearest parser canonical utterance
// (two-stage: train D_z.E on (x, z) and parse with the frozen P_nsp) or that
// utterance's LF (one-stage: train x -> LF directly), then evaluates.
// `m` must hold the frozen P_nsp; its paraphrase model is left untouched.
EvalReport wmd_samples_baseline(const ModelSet& m, const TrainingData& d, const EmbeddingTable& emb,
                                const Database& db, const std::vector<GoldPair>& eval, WmdMode mode,
                                const TrainConfig& cfg, MetricsSink* sink = nullptr);

// x -> LF trained on the grammar's (z, LF) pairs only, evaluated on natural x;
// with multi_task a natural-utterance DAE shares the encoder.
EvalReport canonical_transfer_baseline(const ModelSet& m, const TrainingData& d, const EmbeddingTable& emb,
                                       const Database& db, const std::vector<GoldPair>& eval, bool multi_task,
                                       const TrainConfig& cfg, MetricsSink* sink = nullptr);

}  // namespace dpp
