#include "dpp/train/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "dpp/error.hpp"

namespace dpp {

std::string cycle_tasks_label(unsigned tasks) {
  std::string out;
  auto add = [&](unsigned bit, const char* name) {
    if ((tasks & bit) == 0) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(kTaskDae, "dae");
  add(kTaskBt, "bt");
  add(kTaskDrl, "drl");
  return out.empty() ? "none" : out;
}

unsigned parse_cycle_tasks(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "none") return 0;
  unsigned tasks = 0;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, '+');) {
    part.erase(std::remove_if(part.begin(), part.end(), [](unsigned char c) { return std::isspace(c); }), part.end());
    if (part == "dae") tasks |= kTaskDae;
    else if (part == "bt") tasks |= kTaskBt;
    else if (part == "drl") tasks |= kTaskDrl;
    else throw ConfigError("cycle_tasks: unknown task '" + part + "'");
  }
  return tasks;
}

void TrainConfig::validate() const {
  hp.validate();
  noise.validate();
  if (epochs_pretrain < 0) throw ConfigError("epochs_pretrain must be non-negative");
  if (epochs_cycle < 0) throw ConfigError("epochs_cycle must be non-negative");
  if (epochs_aux < 1) throw ConfigError("epochs_aux must be positive");
  if (semi_fraction < 0 || semi_fraction > 1) throw ConfigError("semi_fraction must be in [0, 1]");
  if (cycle_tasks > (kTaskDae | kTaskBt | kTaskDrl)) throw ConfigError("cycle_tasks: unknown task bits");
  if (epochs_cycle > 0 && cycle_tasks == 0) throw ConfigError("cycle_tasks: at least one task must be enabled");
  if (lambda < 0) throw ConfigError("lambda must be non-negative");
  if (clip_norm < 0) throw ConfigError("clip_norm must be non-negative");
  if (grammar_depth < 1) throw ConfigError("grammar_depth must be positive");
  if (paraphrases_per_canonical < 1) throw ConfigError("paraphrases_per_canonical must be positive");
  if (eval_fraction <= 0 || eval_fraction >= 1) throw ConfigError("eval_fraction must be in (0, 1)");
  if (dev_size < 1) throw ConfigError("dev_size must be positive");
  if (parser_dev_fraction <= 0 || parser_dev_fraction >= 1) throw ConfigError("parser_dev_fraction must be in (0, 1)");
}

namespace {

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string flag(bool b) { return b ? "true" : "false"; }

}  // namespace

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg) {
  const auto& h = cfg.hp;
  const auto& n = cfg.noise;
  return {
      {"train.epochs_pretrain", std::to_string(cfg.epochs_pretrain)},
      {"train.epochs_cycle", std::to_string(cfg.epochs_cycle)},
      {"train.epochs_aux", std::to_string(cfg.epochs_aux)},
      {"train.semi_fraction", num(cfg.semi_fraction)},
      {"train.cycle_tasks", cycle_tasks_label(cfg.cycle_tasks)},
      {"train.seed", std::to_string(cfg.seed)},
      {"train.lambda", num(cfg.lambda)},
      {"train.clip_norm", num(cfg.clip_norm)},
      {"train.shared_encoder", flag(cfg.shared_encoder)},
      {"model.emb_dim", std::to_string(h.emb_dim)},
      {"model.hidden", std::to_string(h.hidden)},
      {"model.dropout", num(h.dropout)},
      {"model.init_range", num(h.init_range)},
      {"model.lr", num(h.lr)},
      {"model.batch", std::to_string(h.batch)},
      {"model.beam", std::to_string(h.beam)},
      {"model.K", std::to_string(h.K)},
      {"model.max_decode_len", std::to_string(h.max_decode_len)},
      {"model.attn_dim", std::to_string(h.attn_dim)},
      {"noise.p_max", num(n.p_max)},
      {"noise.C", std::to_string(n.candidates)},
      {"noise.insert_low", num(n.insert_low)},
      {"noise.insert_high", num(n.insert_high)},
      {"noise.ngram", std::to_string(n.ngram)},
      {"noise.drop", flag(n.drop)},
      {"noise.add", flag(n.add)},
      {"noise.shuffle", flag(n.shuffle)},
      {"data.grammar_depth", std::to_string(cfg.grammar_depth)},
      {"data.paraphrases_per_canonical", std::to_string(cfg.paraphrases_per_canonical)},
      {"data.eval_fraction", num(cfg.eval_fraction)},
      {"data.dev_size", std::to_string(cfg.dev_size)},
      {"data.parser_dev_fraction", num(cfg.parser_dev_fraction)},
  };
}

std::string config_fingerprint(const TrainConfig& cfg, const std::vector<std::string>& exclude) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xFF;
    h *= 1099511628211ULL;
  };
  for (const auto& [k, v] : config_entries(cfg)) {
    if (std::find(exclude.begin(), exclude.end(), k) != exclude.end()) continue;
    mix(k);
    mix(v);
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::uint64_t sub_seed(std::uint64_t seed, std::string_view component) {
  // FNV-1a over the component name, mixed into the seed with splitmix64.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : component) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace dpp
