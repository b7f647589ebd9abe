#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dpp/domain/database.hpp"
#include "dpp/domain/grammar.hpp"
#include "dpp/error.hpp"
#include "dpp/harness/cli.hpp"
#include "dpp/harness/config_file.hpp"
#include "dpp/harness/pipeline.hpp"
#include "dpp/textstats/bleu.hpp"
#include "dpp/textstats/wmd.hpp"

namespace py = pybind11;

namespace {

// Runs one CLI invocation in-process; the GIL is released for the duration.
py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = dpp::cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

double wmd_dict(const std::vector<std::string>& a, const std::vector<std::string>& b,
                const std::map<std::string, std::vector<float>>& vectors) {
  if (vectors.empty()) throw py::value_error("embeddings must not be empty");
  dpp::EmbeddingTable emb(static_cast<int>(vectors.begin()->second.size()));
  for (const auto& [token, vec] : vectors) {
    if (static_cast<int>(vec.size()) != emb.dim()) throw py::value_error("embedding '" + token + "' has the wrong dimension");
    emb.set(token, vec);
  }
  return dpp::wmd(a, b, emb);
}

std::vector<std::pair<std::string, std::string>> grammar_pairs(int depth) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : dpp::enumerate_pairs(dpp::basketball_grammar(), depth))
    out.emplace_back(p.canonical.text(), p.lf.serialize());
  return out;
}

std::string execute_lf(const std::string& lf_text) {
  static const dpp::Database db = dpp::Database::basketball();
  const auto lf = dpp::LogicalForm::try_parse(dpp::lf_tokenize(lf_text));
  if (!lf) throw py::value_error("malformed logical form: " + lf_text);
  return dpp::execute(*lf, db).to_string();
}

std::vector<std::pair<std::string, std::string>> config_dict(const std::string& path) {
  return dpp::config_entries(dpp::load_config(path));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Synthetic-domain semantic parsing through canonical paraphrases";

  py::register_exception<dpp::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<dpp::LoadError>(m, "LoadError", PyExc_OSError);

  m.def("run_cli", &run_cli, py::arg("args"),
        "Run one command as the dpp executable would; returns (exit_code, stdout, stderr).");
  m.def("bleu", py::overload_cast<const std::vector<std::string>&, const std::vector<std::string>&, int>(&dpp::bleu),
        py::arg("candidate"), py::arg("reference"), py::arg("max_n") = 4, "Smoothed sentence BLEU of token lists.");
  m.def("wmd", &wmd_dict, py::arg("a"), py::arg("b"), py::arg("embeddings"),
        "Word mover's distance between token lists under the given word vectors.");
  m.def("grammar_pairs", &grammar_pairs, py::arg("depth") = dpp::kDefaultDepth,
        "Every (canonical utterance, logical form) pair of the bundled grammar.");
  m.def("execute", &execute_lf, py::arg("lf"), "Denotation of a logical form on the bundled database.");
  m.def("load_config", &config_dict, py::arg("path") = "",
        "Resolved configuration as (section.key, value) pairs; an empty path gives the defaults.");
  m.def("version", &dpp::dpp_version);
}
