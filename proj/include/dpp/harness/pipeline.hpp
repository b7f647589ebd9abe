#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dpp/domain/corpora.hpp"
#include "dpp/train/trainer.hpp"

namespace dpp {

/// Data, vocabularies and word vectors shared by every command of a run.
struct Workspace {
  TrainConfig cfg;  // max_decode_len resolved from the data when it was 0
  Corpora corpora;
  TrainingData data;
  Database db = Database::basketball();
  Vocabularies vocabs;
  EmbeddingTable emb;
};

// Generates the synthetic corpora from cfg (grammar depth, paraphrase count,
// eval split, seed). Deterministic in cfg.
Corpora generate_corpora(const TrainConfig& cfg);

// Corpora from `data_dir` when it holds a complete set, otherwise freshly
// generated and written there (when data_dir is non-empty). A labels file
// replaces the semi-supervised pool; an embeddings file seeds word vectors.
Workspace prepare_workspace(const TrainConfig& cfg, const std::string& data_dir, const std::string& labels_path = "",
                            const std::string& embeddings_path = "");

// Models drawn from the "init" sub-seed of cfg.seed.
ModelSet fresh_models(const Workspace& ws);

struct RunOptions {
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::string checkpoint;  // input checkpoint directory, command dependent default
  std::string axis = "noise";
  std::string baseline = "wmd_two_stage";
  std::string labels_path;
  std::string embeddings_path;
  TrainConfig cfg;  // file values with flag overrides applied
};

/// Provenance record of one command invocation, written as manifest.json
/// before work starts and rewritten when it ends.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> resolved;
  std::uint64_t seed = 0;
  std::string version;
  std::string started_at;
  std::string finished_at;
  std::string out_dir;
  std::string status = "running";
  std::vector<std::string> artifacts;  // relative to out_dir

  std::string to_json() const;
  void write(const std::string& path) const;
};

// Version string baked in at build time.
std::string dpp_version();

const std::vector<std::string>& command_names();

// Runs one command under opts.out_dir. Throws ConfigError/LoadError for
// invalid input and other exceptions for runtime failures.
void run_command(const RunOptions& opts, std::ostream& log);

}  // namespace dpp
