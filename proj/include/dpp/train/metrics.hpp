#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dpp {

/// One line of the metrics stream. Everything here is a deterministic
/// function of seed and configuration; wall-clock time goes to a separate
/// timing stream so that metrics files of repeated runs compare byte-equal.
struct MetricsRecord {
  std::string phase;
  int epoch = 0;
  std::map<std::string, double> losses;
  std::map<std::string, double> rewards;
  std::map<std::string, double> counts;
  std::optional<double> selection;
  std::optional<double> accuracy;
  std::string note;
  double wall_seconds = 0.0;  // timing stream only

  std::string to_json() const;
};

/// Append-only sink. Paths may be empty to keep records in memory only.
class MetricsSink {
 public:
  MetricsSink() = default;
  MetricsSink(const std::string& metrics_path, const std::string& timing_path);

  void append(const MetricsRecord& r);
  const std::vector<MetricsRecord>& records() const { return records_; }

 private:
  std::ofstream metrics_;
  std::ofstream timing_;
  std::vector<MetricsRecord> records_;
};

// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& xs);

}  // namespace dpp
