#include "dpp/train/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dpp {

std::string MetricsRecord::to_json() const {
  nlohmann::ordered_json j;
  j["phase"] = phase;
  j["epoch"] = epoch;
  j["losses"] = losses;
  if (!rewards.empty()) j["rewards"] = rewards;
  if (!counts.empty()) j["counts"] = counts;
  if (selection) j["selection"] = *selection;
  if (accuracy) j["accuracy"] = *accuracy;
  if (!note.empty()) j["note"] = note;
  return j.dump();
}

MetricsSink::MetricsSink(const std::string& metrics_path, const std::string& timing_path) {
  if (!metrics_path.empty()) {
    metrics_.open(metrics_path, std::ios::app);
    if (!metrics_) throw std::runtime_error(metrics_path + ": cannot open for append");
  }
  if (!timing_path.empty()) {
    timing_.open(timing_path, std::ios::app);
    if (!timing_) throw std::runtime_error(timing_path + ": cannot open for append");
  }
}

void MetricsSink::append(const MetricsRecord& r) {
  records_.push_back(r);
  if (metrics_.is_open()) metrics_ << r.to_json() << '\n' << std::flush;
  if (timing_.is_open()) {
    nlohmann::ordered_json t;
    t["phase"] = r.phase;
    t["epoch"] = r.epoch;
    t["wall_seconds"] = r.wall_seconds;
    timing_ << t.dump() << '\n' << std::flush;
  }
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

}  // namespace dpp
