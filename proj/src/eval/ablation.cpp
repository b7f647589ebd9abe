#include "dpp/eval/ablation.hpp"

#include <initializer_list>
#include <iomanip>
#include <sstream>

#include "dpp/error.hpp"

namespace dpp {

PipelineResult train_and_evaluate(ModelSet& m, const TrainingData& d, const EmbeddingTable& emb, const Database& db,
                                  const std::vector<GoldPair>& eval, const TrainConfig& cfg, MetricsSink* sink) {
  PipelineResult r;
  if (cfg.epochs_pretrain > 0) r.dae = pretrain_dae(m, d, emb, cfg, sink);
  if (cfg.epochs_cycle > 0) r.cycle = cycle_learn(m, d, emb, db, cfg, sink);
  r.selection = selection_metric(m, d.dev_natural, d.dev_canonical, cfg.lambda);
  r.report = evaluate(m, db, eval, cfg.hp.beam, config_fingerprint(cfg));
  if (sink != nullptr) {
    MetricsRecord rec{"eval", 0, {}, {}, {{"matches", static_cast<double>(r.report.matches())},
                                         {"total", static_cast<double>(r.report.examples.size())}},
                      r.selection.value, r.report.accuracy, "", 0.0};
    sink->append(rec);
  }
  return r;
}

AblationAxis parse_axis(const std::string& name) {
  if (name == "noise" || name == "noise_subsets") return AblationAxis::NoiseSubsets;
  if (name == "cycle" || name == "cycle_tasks") return AblationAxis::CycleTasks;
  if (name == "shared_encoder") return AblationAxis::SharedEncoder;
  throw ConfigError("axis: unknown ablation axis '" + name + "' (noise, cycle, shared_encoder)");
}

std::string to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::NoiseSubsets: return "noise";
    case AblationAxis::CycleTasks: return "cycle";
    case AblationAxis::SharedEncoder: return "shared_encoder";
  }
  return "unknown";
}

namespace {

std::vector<std::string> ablated_keys(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::NoiseSubsets: return {"noise.drop", "noise.add", "noise.shuffle"};
    case AblationAxis::CycleTasks: return {"train.cycle_tasks"};
    case AblationAxis::SharedEncoder: return {"train.shared_encoder"};
  }
  return {};
}

}  // namespace

std::vector<std::pair<std::string, TrainConfig>> ablation_configs(AblationAxis axis, const TrainConfig& base) {
  std::vector<std::pair<std::string, TrainConfig>> out;
  switch (axis) {
    case AblationAxis::NoiseSubsets: {
      // bit 0 drop, bit 1 add, bit 2 shuffle; listed by subset size.
      for (unsigned mask : {0U, 1U, 2U, 4U, 3U, 5U, 6U, 7U}) {
        TrainConfig c = base;
        c.noise.drop = (mask & 1U) != 0;
        c.noise.add = (mask & 2U) != 0;
        c.noise.shuffle = (mask & 4U) != 0;
        out.emplace_back(c.noise.label(), c);
      }
      break;
    }
    case AblationAxis::CycleTasks: {
      for (unsigned tasks : std::initializer_list<unsigned>{kTaskDae, kTaskBt, kTaskDrl, kTaskDae | kTaskBt, kTaskDae | kTaskDrl, kTaskBt | kTaskDrl,
                             kTaskDae | kTaskBt | kTaskDrl}) {
        TrainConfig c = base;
        c.cycle_tasks = tasks;
        out.emplace_back(cycle_tasks_label(tasks), c);
      }
      break;
    }
    case AblationAxis::SharedEncoder: {
      for (bool shared : {true, false}) {
        TrainConfig c = base;
        c.shared_encoder = shared;
        out.emplace_back(shared ? "shared" : "separate", c);
      }
      break;
    }
  }
  return out;
}

AblationTable run_ablation(AblationAxis axis, const TrainConfig& base, const ModelSet& prepared, const TrainingData& d,
                           const EmbeddingTable& emb, const Database& db, const std::vector<GoldPair>& eval,
                           MetricsSink* sink) {
  base.validate();
  if (!prepared.nsp.frozen || !prepared.aux.frozen)
    throw std::logic_error("run_ablation: auxiliary models must be trained and frozen");
  AblationTable table;
  table.axis = axis;
  const EmbeddingTable* file = emb.dim() == prepared.hp.emb_dim ? &emb : nullptr;
  for (auto& [label, cfg] : ablation_configs(axis, base)) {
    AblationRow row;
    row.label = label;
    row.fingerprint = config_fingerprint(cfg);
    row.base_fingerprint = config_fingerprint(cfg, ablated_keys(axis));
    try {
      cfg.validate();
      ModelSet m = with_fresh_paraphrase(prepared, file, sub_seed(cfg.seed, "init"), cfg.shared_encoder);
      const auto r = train_and_evaluate(m, d, emb, db, eval, cfg, sink);
      row.accuracy = r.report.accuracy;
      row.selection = r.selection.value;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    if (sink != nullptr) {
      MetricsRecord rec{"ablate/" + to_string(axis), 0, {}, {}, {}, row.selection, row.accuracy,
                        row.label + (row.error.empty() ? "" : " failed: " + row.error), 0.0};
      sink->append(rec);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string AblationTable::to_csv() const {
  std::ostringstream os;
  os << "axis,configuration,accuracy,selection,fingerprint,base_fingerprint,error\n";
  os << std::setprecision(10);
  for (const auto& r : rows)
    os << to_string(axis) << ',' << csv_field(r.label) << ',' << r.accuracy << ',' << r.selection << ','
       << r.fingerprint << ',' << r.base_fingerprint << ',' << csv_field(r.error) << '\n';
  return os.str();
}

std::string AblationTable::render() const {
  std::size_t w = 13;
  for (const auto& r : rows) w = std::max(w, r.label.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w)) << "configuration" << "  accuracy  selection\n";
  os << std::string(w + 21, '-') << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(w)) << r.label << "  ";
    if (!r.error.empty()) {
      os << "failed: " << r.error << '\n';
      continue;
    }
    os << std::fixed << std::setprecision(1) << std::setw(8) << 100.0 * r.accuracy << "  " << std::setprecision(4)
       << r.selection << '\n';
  }
  return os.str();
}

}  // namespace dpp
