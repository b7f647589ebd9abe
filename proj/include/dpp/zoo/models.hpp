#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dpp/domain/corpora.hpp"
#include "dpp/domain/database.hpp"
#include "dpp/domain/logical_form.hpp"
#include "dpp/net/decode.hpp"
#include "dpp/net/layers.hpp"
#include "dpp/textstats/embedding.hpp"
#include "dpp/textstats/vocab.hpp"

namespace dpp {

/// Encoder input uses the union of both sides; each decoder owns its side's
/// vocabulary; the naive parser decodes into logical-form tokens.
struct Vocabularies {
  Vocab encoder;
  Vocab natural;
  Vocab canonical;
  Vocab lf;
};

Vocabularies build_vocabularies(const std::vector<Utterance>& natural, const std::vector<Utterance>& canonical,
                                const std::vector<CanonicalPair>& parser_pairs);

enum class Direction { ToCanonical, ToNatural };

/// Encoder(s) E and decoders D_x (natural) and D_z (canonical). With
/// shared_encoder off, D_x and D_z each read from their own encoder.
struct ParaphraseModel {
  bool shared_encoder = true;
  net::BiEncoder<float> enc;    // E (feeds D_z, and D_x when shared)
  net::BiEncoder<float> enc_x;  // feeds D_x when not shared; empty otherwise
  net::AttnDecoder<float> dec_x;
  net::AttnDecoder<float> dec_z;
  int max_len = 1;

  net::BiEncoder<float>& encoder(Direction d) { return (shared_encoder || d == Direction::ToCanonical) ? enc : enc_x; }
  net::AttnDecoder<float>& decoder(Direction d) { return d == Direction::ToCanonical ? dec_z : dec_x; }
  net::Seq2Seq<float> seq2seq(Direction d) { return {&encoder(d), &decoder(d), max_len}; }
  void visit(const net::Visitor<float>& f);
};

/// Canonical utterance -> logical-form token sequence.
struct NaiveParser {
  net::BiEncoder<float> enc;
  net::AttnDecoder<float> dec;
  int max_len = 1;
  bool frozen = false;

  net::Seq2Seq<float> seq2seq() { return {&enc, &dec, max_len}; }
  void visit(const net::Visitor<float>& f);
};

struct AuxSummary {
  std::string model;
  int epochs = 0;
  int best_epoch = 0;
  double final_loss = 0.0;
  double metric = 0.0;  // accuracy / exact match, model dependent
};

struct AuxiliaryBundle {
  net::LanguageModel<float> lm_x;
  net::LanguageModel<float> lm_z;
  net::CnnClassifier<float> dis;  // P(canonical | utterance), union vocabulary
  std::vector<AuxSummary> summaries;
  bool frozen = false;

  void visit(const net::Visitor<float>& f);
};

struct ModelSet {
  net::Hyperparams hp;
  Vocabularies vocabs;
  ParaphraseModel para;
  NaiveParser nsp;
  AuxiliaryBundle aux;
};

// All parameters uniform in [-init_range, init_range], drawn in a fixed
// order from `rng`. When `emb` is given, every embedding row whose token came
// from the embedding file is overwritten with the file vector; a dimension
// different from hp.emb_dim is a ConfigError.
ModelSet init_models(const net::Hyperparams& hp, const Vocabularies& vocabs, const EmbeddingTable* emb,
                     std::mt19937_64& rng, bool shared_encoder = true);

// Copy of `m` whose paraphrase model is re-drawn exactly as init_models would
// draw it from a generator seeded with `seed`; P_nsp and the auxiliaries are
// kept.
ModelSet with_fresh_paraphrase(const ModelSet& m, const EmbeddingTable* emb, std::uint64_t seed, bool shared_encoder);

// Copies every parameter of `from` into `to` (same architecture).
void copy_parameters(ParaphraseModel& to, ParaphraseModel& from);

// Decoded token strings plus the decoder's score data.
struct Paraphrase {
  std::vector<std::string> tokens;  // may be empty
  double log_prob = 0.0;
  bool finished = false;
};

enum class DecodeMode { Greedy, Beam };

Paraphrase paraphrase(ModelSet& m, const Utterance& u, Direction d, DecodeMode mode = DecodeMode::Greedy,
                      int width = 1);
// Batched greedy decoding of many inputs.
std::vector<Paraphrase> paraphrase_greedy(ModelSet& m, const std::vector<std::vector<std::string>>& inputs,
                                          Direction d);

// Result of running the naive parser on a canonical token sequence.
struct ParseOutcome {
  std::string lf_text;               // decoded tokens joined by spaces
  std::optional<LogicalForm> lf;     // empty on parse failure
  Denotation denotation;             // ExecError on parse or execution failure
  bool parse_failed = false;

  bool executable() const { return !parse_failed && !denotation.is_error(); }
};

ParseOutcome parse_canonical(ModelSet& m, const std::vector<std::string>& canonical, const Database& db);
std::vector<ParseOutcome> parse_canonical_batch(ModelSet& m, const std::vector<std::vector<std::string>>& canonical,
                                                const Database& db);

// Encoder ids for a token sequence (union vocabulary).
std::vector<int> encoder_ids(const ModelSet& m, const std::vector<std::string>& tokens);
// Decoder-side ids for the target of direction d.
std::vector<int> target_ids(const ModelSet& m, const std::vector<std::string>& tokens, Direction d);

}  // namespace dpp
