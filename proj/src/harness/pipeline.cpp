#include "dpp/harness/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dpp/domain/grammar.hpp"
#include "dpp/domain/naturalizer.hpp"
#include "dpp/error.hpp"
#include "dpp/eval/ablation.hpp"
#include "dpp/eval/baselines.hpp"
#include "dpp/harness/config_file.hpp"
#include "dpp/zoo/checkpoint.hpp"

#ifndef DPP_VERSION
#define DPP_VERSION "0.0.0-unknown"
#endif

namespace fs = std::filesystem;

namespace dpp {

std::string dpp_version() { return DPP_VERSION; }

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gen-data", "pretrain-aux", "pretrain-dae", "cycle",    "train-all",
                                              "eval",     "ablate",       "dump-cases",   "baseline"};
  return names;
}

Corpora generate_corpora(const TrainConfig& cfg) {
  const auto pairs = enumerate_pairs(basketball_grammar(), cfg.grammar_depth);
  CorpusOptions o;
  o.paraphrases_per_canonical = cfg.paraphrases_per_canonical;
  o.eval_fraction = cfg.eval_fraction;
  o.seed = sub_seed(cfg.seed, "data");
  return build_corpora(pairs, basketball_rewrites(), o);
}

namespace {

const char* const kDataFiles[] = {"natural.jsonl", "canonical.jsonl", "eval.jsonl",
                                  "semi_pool.jsonl", "train_pairs.jsonl", "eval_pairs.jsonl"};

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

bool complete_data_dir(const std::string& dir) {
  if (dir.empty()) return false;
  for (const char* f : kDataFiles)
    if (!fs::exists(fs::path(dir) / f)) return false;
  return true;
}

void write_corpora(const Corpora& c, const Database& db, const std::string& dir) {
  fs::create_directories(dir);
  write_jsonl(path_in(dir, "natural.jsonl"), to_records(c.natural));
  write_jsonl(path_in(dir, "canonical.jsonl"), to_records(c.canonical));
  write_jsonl(path_in(dir, "eval.jsonl"), to_records(c.eval, &db));
  write_jsonl(path_in(dir, "semi_pool.jsonl"), to_records(c.semi_pool, &db));
  write_jsonl(path_in(dir, "train_pairs.jsonl"), to_records(c.train_pairs, &db));
  write_jsonl(path_in(dir, "eval_pairs.jsonl"), to_records(c.eval_pairs, &db));
}

Corpora read_corpora(const std::string& dir) {
  Corpora c;
  c.natural = utterances_from(read_jsonl(path_in(dir, "natural.jsonl")), UtteranceKind::Natural);
  c.canonical = utterances_from(read_jsonl(path_in(dir, "canonical.jsonl")), UtteranceKind::Canonical);
  c.eval = gold_pairs_from(read_jsonl(path_in(dir, "eval.jsonl")));
  c.semi_pool = gold_pairs_from(read_jsonl(path_in(dir, "semi_pool.jsonl")));
  c.train_pairs = canonical_pairs_from(read_jsonl(path_in(dir, "train_pairs.jsonl")));
  c.eval_pairs = canonical_pairs_from(read_jsonl(path_in(dir, "eval_pairs.jsonl")));
  return c;
}

}  // namespace

Workspace prepare_workspace(const TrainConfig& cfg, const std::string& data_dir, const std::string& labels_path,
                            const std::string& embeddings_path) {
  cfg.validate();
  Workspace ws;
  ws.cfg = cfg;
  if (complete_data_dir(data_dir)) {
    ws.corpora = read_corpora(data_dir);
  } else {
    ws.corpora = generate_corpora(cfg);
    if (!data_dir.empty()) write_corpora(ws.corpora, ws.db, data_dir);
  }
  if (!labels_path.empty()) {
    if (!fs::exists(labels_path)) throw ConfigError("labels-path: file not found: " + labels_path);
    ws.corpora.semi_pool = gold_pairs_from(read_jsonl(labels_path));
  }
  ws.data = make_training_data(ws.corpora, cfg);
  if (ws.cfg.hp.max_decode_len == 0)
    ws.cfg.hp.max_decode_len = net::derive_max_decode_len(longest_sequence(ws.data));
  ws.vocabs = build_vocabularies(ws.data.natural, ws.data.canonical, ws.corpora.train_pairs);
  std::mt19937_64 rng(sub_seed(cfg.seed, "embeddings"));
  const auto tokens = ws.vocabs.encoder.content_tokens();
  if (embeddings_path.empty()) {
    ws.emb = EmbeddingTable::random(tokens, cfg.hp.emb_dim, rng);
  } else {
    if (!fs::exists(embeddings_path)) throw ConfigError("embeddings-path: file not found: " + embeddings_path);
    ws.emb = EmbeddingTable::load(embeddings_path, tokens, cfg.hp.emb_dim, rng);
  }
  return ws;
}

ModelSet fresh_models(const Workspace& ws) {
  std::mt19937_64 rng(sub_seed(ws.cfg.seed, "init"));
  return init_models(ws.cfg.hp, ws.vocabs, &ws.emb, rng, ws.cfg.shared_encoder);
}

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_path"] = config_path;
  nlohmann::ordered_json r = nlohmann::ordered_json::object();
  for (const auto& [k, v] : resolved) r[k] = v;
  j["resolved"] = r;
  j["seed"] = seed;
  j["version"] = version;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["out_dir"] = out_dir;
  j["status"] = status;
  j["artifacts"] = artifacts;
  return j.dump(2);
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << to_json() << '\n';
}

namespace {

struct Run {
  const RunOptions& opts;
  std::ostream& log;
  RunManifest manifest;
  std::string out;

  std::string at(const std::string& rel) const { return (fs::path(out) / rel).string(); }
  void artifact(const std::string& rel) { manifest.artifacts.push_back(rel); }

  std::string checkpoint_or(const std::string& fallback) const {
    const std::string dir = opts.checkpoint.empty() ? at(fallback) : opts.checkpoint;
    if (!fs::exists(fs::path(dir) / "meta.txt")) throw LoadError(dir + "/meta.txt: checkpoint file not found");
    return dir;
  }

  ModelSet load(const Workspace& ws, const std::string& fallback) {
    const std::string dir = checkpoint_or(fallback);
    log << "loading checkpoint " << dir << '\n';
    return load_checkpoint(dir, ws.vocabs);
  }

  void save(ModelSet& m, const std::string& rel) {
    save_checkpoint(m, at(rel));
    artifact(rel);
    log << "saved " << rel << '\n';
  }

  void write_eval(const EvalReport& r, const std::string& stem) {
    fs::create_directories(at("eval"));
    write_report(r, at("eval/" + stem + ".jsonl"), at("eval/" + stem + ".txt"));
    artifact("eval/" + stem + ".jsonl");
    artifact("eval/" + stem + ".txt");
    log << render_summary({r});
  }
};

void require_frozen(const ModelSet& m, const std::string& what) {
  if (!m.nsp.frozen || !m.aux.frozen)
    throw ConfigError(what + ": checkpoint does not contain trained auxiliary models (run pretrain-aux first)");
}

}  // namespace

void run_command(const RunOptions& opts, std::ostream& log) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), opts.command) == names.end())
    throw ConfigError("unknown command: " + opts.command);
  opts.cfg.validate();
  if (opts.out_dir.empty()) throw ConfigError("out: output directory is empty");

  Run run{opts, log, {}, opts.out_dir};
  fs::create_directories(run.out);
  auto& mf = run.manifest;
  mf.command = opts.command;
  mf.config_path = opts.config_path;
  mf.seed = opts.cfg.seed;
  mf.version = dpp_version();
  mf.started_at = utc_now();
  mf.out_dir = fs::absolute(run.out).string();
  mf.resolved = config_entries(opts.cfg);
  const std::string manifest_path = run.at("manifest.json");
  mf.write(manifest_path);

  Workspace ws = prepare_workspace(opts.cfg, run.at("data"), opts.labels_path, opts.embeddings_path);
  mf.resolved = config_entries(ws.cfg);
  for (const char* f : kDataFiles) run.artifact(std::string("data/") + f);
  {
    std::ofstream cfg_out(run.at("config.ini"));
    cfg_out << render_config(ws.cfg);
    run.artifact("config.ini");
  }
  mf.write(manifest_path);

  MetricsSink sink(run.at("metrics.jsonl"), run.at("timing.jsonl"));
  const TrainConfig& cfg = ws.cfg;
  const std::string& cmd = opts.command;
  auto finish = [&](const std::string& status) {
    mf.status = status;
    mf.finished_at = utc_now();
    mf.write(manifest_path);
  };

  try {
    if (cmd != "gen-data") {
      run.artifact("metrics.jsonl");
      run.artifact("timing.jsonl");
    }
    if (cmd == "gen-data") {
      log << "natural " << ws.data.natural.size() << ", canonical " << ws.data.canonical.size() << ", eval "
          << ws.corpora.eval.size() << ", parser pairs " << ws.corpora.train_pairs.size() << '\n';
    } else if (cmd == "pretrain-aux" || cmd == "train-all") {
      ModelSet m = fresh_models(ws);
      for (const auto& s : pretrain_auxiliaries(m, ws.data, cfg, &sink))
        log << s.model << ": final loss " << s.final_loss << ", metric " << s.metric << '\n';
      run.save(m, "checkpoints/aux");
      if (cmd == "train-all") {
        const auto r = train_and_evaluate(m, ws.data, ws.emb, ws.db, ws.corpora.eval, cfg, &sink);
        log << "dae best epoch " << r.dae.best_epoch << ", cycle best epoch " << r.cycle.best_epoch << '\n';
        run.save(m, "checkpoints/final");
        auto report = r.report;
        run.write_eval(report, "report");
      }
    } else if (cmd == "pretrain-dae") {
      ModelSet m = run.load(ws, "checkpoints/aux");
      require_frozen(m, cmd);
      const auto s = pretrain_dae(m, ws.data, ws.emb, cfg, &sink);
      log << "dae best epoch " << s.best_epoch << " selection " << s.best_selection << '\n';
      run.save(m, "checkpoints/dae");
    } else if (cmd == "cycle") {
      ModelSet m = run.load(ws, "checkpoints/dae");
      require_frozen(m, cmd);
      const auto s = cycle_learn(m, ws.data, ws.emb, ws.db, cfg, &sink);
      log << "cycle best epoch " << s.best_epoch << " selection " << s.best_selection << '\n';
      run.save(m, "checkpoints/final");
    } else if (cmd == "eval") {
      ModelSet m = run.load(ws, "checkpoints/final");
      require_frozen(m, cmd);
      const auto r = evaluate(m, ws.db, ws.corpora.eval, cfg.hp.beam, config_fingerprint(cfg));
      sink.append(MetricsRecord{"eval", 0, {}, {}, {}, {}, r.accuracy, "", 0.0});
      run.write_eval(r, "report");
    } else if (cmd == "dump-cases") {
      ModelSet m = run.load(ws, "checkpoints/final");
      require_frozen(m, cmd);
      std::vector<Utterance> inputs;
      for (const auto& p : ws.corpora.eval) inputs.push_back(p.natural);
      dump_cases(m, ws.db, inputs, run.at("cases.txt"));
      run.artifact("cases.txt");
      log << "wrote " << inputs.size() << " cases\n";
    } else if (cmd == "baseline") {
      ModelSet m = run.load(ws, "checkpoints/aux");
      require_frozen(m, cmd);
      EvalReport r;
      if (opts.baseline == "wmd_two_stage" || opts.baseline == "wmd_one_stage") {
        const auto mode = opts.baseline == "wmd_two_stage" ? WmdMode::TwoStage : WmdMode::OneStage;
        r = wmd_samples_baseline(m, ws.data, ws.emb, ws.db, ws.corpora.eval, mode, cfg, &sink);
      } else if (opts.baseline == "one_stage" || opts.baseline == "multitask_dae") {
        r = canonical_transfer_baseline(m, ws.data, ws.emb, ws.db, ws.corpora.eval, opts.baseline == "multitask_dae",
                                        cfg, &sink);
      } else {
        throw ConfigError("baseline: unknown baseline '" + opts.baseline +
                          "' (wmd_two_stage, wmd_one_stage, one_stage, multitask_dae)");
      }
      r.fingerprint = config_fingerprint(cfg);
      sink.append(MetricsRecord{"baseline/" + r.system, 0, {}, {}, {}, {}, r.accuracy, "", 0.0});
      run.write_eval(r, "baseline_" + opts.baseline);
    } else if (cmd == "ablate") {
      const AblationAxis axis = parse_axis(opts.axis);
      ModelSet m = run.load(ws, "checkpoints/aux");
      require_frozen(m, cmd);
      const auto table = run_ablation(axis, cfg, m, ws.data, ws.emb, ws.db, ws.corpora.eval, &sink);
      fs::create_directories(run.at("ablation"));
      const std::string stem = "ablation/" + to_string(axis);
      std::ofstream(run.at(stem + ".csv")) << table.to_csv();
      std::ofstream(run.at(stem + ".txt")) << table.render();
      run.artifact(stem + ".csv");
      run.artifact(stem + ".txt");
      log << table.render();
    }
  } catch (...) {
    finish("failed");
    throw;
  }
  for (const auto& a : mf.artifacts)
    if (!fs::exists(fs::path(run.out) / a)) {
      finish("failed");
      throw std::runtime_error("artifact missing after run: " + a);
    }
  finish("ok");
}

}  // namespace dpp
