#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dpp/error.hpp"
#include "dpp/harness/cli.hpp"
#include "dpp/harness/config_file.hpp"
#include "dpp/harness/pipeline.hpp"

using namespace dpp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dpp_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("an empty configuration yields the defaults") {
  CHECK(config_entries(parse_config_text("")) == config_entries(TrainConfig{}));
  CHECK(config_entries(load_config("")) == config_entries(TrainConfig{}));
  const auto dir = scratch("empty");
  std::ofstream(dir / "empty.ini").close();
  CHECK(config_entries(load_config((dir / "empty.ini").string())) == config_entries(TrainConfig{}));
  CHECK_THROWS_AS(load_config((dir / "absent.ini").string()), ConfigError);
}

TEST_CASE("configuration text round trips through rendering") {
  TrainConfig c;
  c.hp.K = 3;
  c.hp.lr = 0.003;
  c.noise.shuffle = false;
  c.semi_fraction = 0.25;
  c.cycle_tasks = kTaskDae | kTaskDrl;
  c.seed = 42;
  CHECK(config_entries(parse_config_text(render_config(c))) == config_entries(c));
  const auto parsed = parse_config_text("[model]\nK = 3\nhidden = 12\n[noise]\nshuffle = false\n");
  CHECK(parsed.hp.K == 3);
  CHECK(parsed.hp.hidden == 12);
  CHECK_FALSE(parsed.noise.shuffle);
  CHECK(parsed.hp.emb_dim == 100);
}

TEST_CASE("configuration errors name the key") {
  CHECK(config_error("[model]\nK = 0\n").find("K") != std::string::npos);
  CHECK(config_error("[model]\nK = many\n").find("model.K") != std::string::npos);
  CHECK(config_error("[model]\nwidth = 3\n").find("model.width") != std::string::npos);
  CHECK(config_error("[optim]\nlr = 3\n").find("optim") != std::string::npos);
  CHECK(config_error("[train]\nsemi_fraction = 2\n").find("semi_fraction") != std::string::npos);
  CHECK(config_error("[noise]\nC = 0\n").find("C") != std::string::npos);
  TrainConfig c;
  CHECK_THROWS_AS(set_config_value(c, "model.nope", "1"), ConfigError);
  set_config_value(c, "train.cycle_tasks", "dae+bt");
  CHECK(c.cycle_tasks == (kTaskDae | kTaskBt));
}

TEST_CASE("command-line usage errors exit with code 1") {
  CHECK(run({}).code == kExitInvalid);
  CHECK(run({"train-everything"}).code == kExitInvalid);
  CHECK(run({"eval", "--no-such-flag"}).code == kExitInvalid);
  CHECK(run({"--help"}).code == kExitOk);
  const auto dir = scratch("usage");
  {
    std::ofstream(dir / "bad.ini") << "[model]\nK = 0\n";
  }
  const auto bad = run({"gen-data", "--config", (dir / "bad.ini").string(), "--out", (dir / "o").string()});
  CHECK(bad.code == kExitInvalid);
  CHECK(bad.err.find("K") != std::string::npos);
  CHECK(run({"gen-data", "--semi-fraction", "3", "--out", (dir / "o").string()}).code == kExitInvalid);
  CHECK(run({"ablate", "--axis", "colour", "--out", (dir / "o").string()}).code == kExitInvalid);
}

TEST_CASE("evaluating without a checkpoint names the missing file") {
  const auto dir = scratch("nockpt");
  const auto r = run({"eval", "--out", (dir / "run").string(), "--checkpoint", (dir / "nothing").string()});
  CHECK(r.code == kExitInvalid);
  CHECK(r.err.find("meta.txt") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(dir / "run" / "manifest.json"));
  CHECK(manifest["status"] == "failed");
}

TEST_CASE("runtime failures exit with code 2") {
  const auto dir = scratch("runtime");
  std::ofstream(dir / "file").put('x');
  const auto r = run({"gen-data", "--out", (dir / "file" / "sub").string()});
  CHECK(r.code == kExitRuntime);
}

TEST_CASE("flags override the config file and everything is recorded") {
  const auto dir = scratch("precedence");
  {
    std::ofstream(dir / "c.ini") << "[train]\nseed = 7\nsemi_fraction = 0.5\n[data]\nparaphrases_per_canonical = 2\n";
  }
  const auto out = dir / "run";
  const auto r = run({"gen-data", "--config", (dir / "c.ini").string(), "--seed", "9", "--out", out.string()});
  REQUIRE(r.code == kExitOk);
  const auto resolved = parse_config_text(slurp(out / "config.ini"));
  CHECK(resolved.seed == 9);
  CHECK(resolved.semi_fraction == 0.5);
  CHECK(resolved.paraphrases_per_canonical == 2);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["seed"] == 9);
  CHECK(manifest["command"] == "gen-data");
  CHECK_FALSE(manifest["version"].get<std::string>().empty());
  for (const auto& a : manifest["artifacts"]) CHECK(fs::exists(out / a.get<std::string>()));
  for (const char* f : {"natural.jsonl", "canonical.jsonl", "eval.jsonl", "semi_pool.jsonl", "train_pairs.jsonl",
                        "eval_pairs.jsonl"})
    CHECK(fs::exists(out / "data" / f));

  // A second run reuses the data directory byte for byte.
  const auto before = slurp(out / "data" / "natural.jsonl");
  REQUIRE(run({"gen-data", "--config", (dir / "c.ini").string(), "--seed", "9", "--out", out.string()}).code == kExitOk);
  CHECK(slurp(out / "data" / "natural.jsonl") == before);
}

TEST_CASE("default output directory follows the seed") {
  const auto dir = scratch("default_out");
  ::setenv("DPP_OUT_DIR", dir.c_str(), 1);
  const auto r = run({"gen-data", "--seed", "4"});
  ::unsetenv("DPP_OUT_DIR");
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir / "seed4" / "manifest.json"));
}

TEST_CASE("the library has no network code") {
  const std::regex net(R"(#include\s*[<"](sys/socket\.h|netinet/|arpa/inet\.h|netdb\.h|httplib\.h|curl/))");
  std::size_t scanned = 0;
  for (const char* sub : {"src", "include", "tools"}) {
    for (const auto& e : fs::recursive_directory_iterator(fs::path(DPP_SOURCE_DIR) / sub)) {
      if (!e.is_regular_file()) continue;
      const auto text = slurp(e.path());
      ++scanned;
      INFO(e.path().string());
      CHECK_FALSE(std::regex_search(text, net));
    }
  }
  CHECK(scanned > 20);
}
