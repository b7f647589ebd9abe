#include "dpp/harness/config_file.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dpp/error.hpp"

namespace dpp {

namespace {

std::string trim(std::string s) {
  auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), sp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), sp).base(), s.end());
  return s;
}

std::string bad(const std::string& key, const std::string& value, const char* what) {
  return key + ": expected " + what + ", got '" + value + "'";
}

int as_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    const long long x = std::stoll(v, &used);
    if (used == v.size() && x >= INT32_MIN && x <= INT32_MAX) return static_cast<int>(x);
  } catch (const std::exception&) {
  }
  throw ConfigError(bad(key, v, "an integer"));
}

std::uint64_t as_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    if (!v.empty() && v[0] != '-') {
      const unsigned long long x = std::stoull(v, &used);
      if (used == v.size()) return x;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(bad(key, v, "a non-negative integer"));
}

double as_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(bad(key, v, "a number"));
}

bool as_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(bad(key, v, "true or false"));
}

// Re-raises validation failures with the full key path in front.
void validate_named(const TrainConfig& cfg) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const auto& [key, value] : config_entries(cfg)) {
      const std::string leaf = key.substr(key.find('.') + 1);
      if (msg.rfind(leaf + " ", 0) == 0 || msg.rfind(key, 0) == 0) {
        if (msg.rfind(key, 0) == 0) throw;
        throw ConfigError(key.substr(0, key.find('.') + 1) + msg);
      }
    }
    throw;
  }
}

}  // namespace

void set_config_value(TrainConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto& h = c.hp;
  auto& n = c.noise;
  if (key == "train.epochs_pretrain") c.epochs_pretrain = as_int(key, v);
  else if (key == "train.epochs_cycle") c.epochs_cycle = as_int(key, v);
  else if (key == "train.epochs_aux") c.epochs_aux = as_int(key, v);
  else if (key == "train.semi_fraction") c.semi_fraction = as_double(key, v);
  else if (key == "train.cycle_tasks") {
    try {
      c.cycle_tasks = parse_cycle_tasks(v);
    } catch (const ConfigError& e) {
      throw ConfigError("train." + std::string(e.what()));
    }
  }
  else if (key == "train.seed") c.seed = as_u64(key, v);
  else if (key == "train.lambda") c.lambda = as_double(key, v);
  else if (key == "train.clip_norm") c.clip_norm = as_double(key, v);
  else if (key == "train.shared_encoder") c.shared_encoder = as_bool(key, v);
  else if (key == "model.emb_dim") h.emb_dim = as_int(key, v);
  else if (key == "model.hidden") h.hidden = as_int(key, v);
  else if (key == "model.dropout") h.dropout = as_double(key, v);
  else if (key == "model.init_range") h.init_range = as_double(key, v);
  else if (key == "model.lr") h.lr = as_double(key, v);
  else if (key == "model.batch") h.batch = as_int(key, v);
  else if (key == "model.beam") h.beam = as_int(key, v);
  else if (key == "model.K") h.K = as_int(key, v);
  else if (key == "model.max_decode_len") h.max_decode_len = as_int(key, v);
  else if (key == "model.attn_dim") h.attn_dim = as_int(key, v);
  else if (key == "noise.p_max") n.p_max = as_double(key, v);
  else if (key == "noise.C") n.candidates = as_int(key, v);
  else if (key == "noise.insert_low") n.insert_low = as_double(key, v);
  else if (key == "noise.insert_high") n.insert_high = as_double(key, v);
  else if (key == "noise.ngram") n.ngram = as_int(key, v);
  else if (key == "noise.drop") n.drop = as_bool(key, v);
  else if (key == "noise.add") n.add = as_bool(key, v);
  else if (key == "noise.shuffle") n.shuffle = as_bool(key, v);
  else if (key == "data.grammar_depth") c.grammar_depth = as_int(key, v);
  else if (key == "data.paraphrases_per_canonical") c.paraphrases_per_canonical = as_int(key, v);
  else if (key == "data.eval_fraction") c.eval_fraction = as_double(key, v);
  else if (key == "data.dev_size") c.dev_size = as_int(key, v);
  else if (key == "data.parser_dev_fraction") c.parser_dev_fraction = as_double(key, v);
  else throw ConfigError(key + ": unknown configuration key");
}

TrainConfig parse_config_text(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: line " + std::to_string(e.line()) + ": " + e.message());
  }
  TrainConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(section + ": key outside of a section ([train], [model], [noise], [data])");
    for (const auto& [key, value] : body) set_config_value(cfg, section + "." + key, value.data());
  }
  validate_named(cfg);
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  if (!std::filesystem::exists(path)) throw ConfigError(path + ": config file not found");
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot read config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string render_config(const TrainConfig& cfg) {
  std::ostringstream os;
  std::string current;
  for (const auto& [key, value] : config_entries(cfg)) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) os << '\n';
      os << '[' << section << "]\n";
      current = section;
    }
    os << key.substr(dot + 1) << " = " << value << '\n';
  }
  return os.str();
}

}  // namespace dpp
