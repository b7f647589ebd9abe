#include "dpp/harness/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "dpp/error.hpp"
#include "dpp/harness/config_file.hpp"
#include "dpp/harness/pipeline.hpp"

namespace dpp {

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::string axis = "noise";
  std::string baseline = "wmd_two_stage";
  std::optional<double> semi_fraction;
  std::string labels_path;
  std::string embeddings_path;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "INI config file (missing keys take defaults)");
  sub->add_option("--seed", f.seed, "global seed; overrides train.seed");
  sub->add_option("--out", f.out, "run directory (default: $DPP_OUT_DIR/seed<seed>, else runs/seed<seed>)");
  sub->add_option("--checkpoint", f.checkpoint, "input checkpoint directory");
  sub->add_option("--axis", f.axis, "ablation axis: noise, cycle, shared_encoder");
  sub->add_option("--baseline", f.baseline, "wmd_two_stage, wmd_one_stage, one_stage, multitask_dae");
  sub->add_option("--semi-fraction", f.semi_fraction, "labeled fraction in [0, 1]; overrides train.semi_fraction");
  sub->add_option("--labels-path", f.labels_path, "JSONL pair records used as the labeled pool");
  sub->add_option("--embeddings-path", f.embeddings_path, "word vectors, one 'token v1 .. vd' line each");
}

std::string describe(const std::string& command) {
  static const std::map<std::string, std::string> text{
      {"gen-data", "generate the synthetic corpora under <out>/data"},
      {"pretrain-aux", "train LM_x, LM_z, the style discriminator and the canonical parser, then freeze them"},
      {"pretrain-dae", "denoising pretraining of the paraphrase model from checkpoints/aux"},
      {"cycle", "cycle learning (back-translation and DRL) from checkpoints/dae"},
      {"train-all", "pretrain-aux, pretrain-dae and cycle in one run, then evaluate"},
      {"eval", "evaluate checkpoints/final on the held-out pairs"},
      {"ablate", "train and evaluate every variant along --axis"},
      {"dump-cases", "write natural -> canonical -> LF -> denotation cases for the held-out set"},
      {"baseline", "train and evaluate one --baseline from checkpoints/aux"}};
  const auto it = text.find(command);
  return it == text.end() ? std::string() : it->second;
}

std::string default_out(std::uint64_t seed) {
  const char* root = std::getenv("DPP_OUT_DIR");
  const std::string base = (root != nullptr && *root != '\0') ? root : "runs";
  return base + "/seed" + std::to_string(seed);
}

}  // namespace

int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dual paraphrase semantic parsing: data generation, training, evaluation"};
  app.require_subcommand(1);
  Flags flags;
  for (const auto& name : command_names()) add_flags(app.add_subcommand(name, describe(name)), flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitInvalid;
  }

  RunOptions opts;
  opts.command = app.get_subcommands().front()->get_name();
  try {
    opts.config_path = flags.config;
    opts.cfg = load_config(flags.config);
    if (flags.seed) opts.cfg.seed = *flags.seed;
    if (flags.semi_fraction) opts.cfg.semi_fraction = *flags.semi_fraction;
    opts.cfg.validate();
    opts.out_dir = flags.out.empty() ? default_out(opts.cfg.seed) : flags.out;
    opts.checkpoint = flags.checkpoint;
    opts.axis = flags.axis;
    opts.baseline = flags.baseline;
    opts.labels_path = flags.labels_path;
    opts.embeddings_path = flags.embeddings_path;
    run_command(opts, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const LoadError& e) {
    err << "load error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli(args, std::cout, std::cerr);
}

}  // namespace dpp
