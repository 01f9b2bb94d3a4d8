#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "noisyrd/estimator.hpp"
#include "noisyrd/inference.hpp"
#include "noisyrd/noise_model.hpp"
#include "noisyrd/targets.hpp"
#include "noisyrd/types.hpp"

namespace noisyrd {

/// Comma-separated table with a required header row; dot decimals, UTF-8.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<Vector> columns;

  Index rows() const { return columns.empty() ? 0 : columns.front().size(); }
  /// Index of a named column, or nullopt.
  std::optional<Index> find(const std::string& name) const;
  /// Named column; throws DataError("missing column: <name>") when absent.
  const Vector& column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Vector>& columns);

/// Builds a sample batch from a CSV with columns z, y and optional w. When w
/// is present it must match 1{z >= cutoff} exactly.
SampleBatch load_batch_csv(const std::string& path, double cutoff);

/// Fully resolved run settings: config-file values overridden by flags,
/// defaults filled in. Serialized back into every report.
struct RunSettings {
  std::optional<double> cutoff;
  std::optional<NoiseModel> noise;
  TargetSpec target;
  PipelineOptions pipeline;
  std::uint64_t seed = 1;
  std::optional<std::string> fbar_csv;
  std::optional<std::string> gamma_csv;
  int jobs = 1;
};

/// Parses the JSON config document into settings (missing keys keep their
/// defaults).
RunSettings parse_config(const nlohmann::json& doc);

nlohmann::json settings_to_json(const RunSettings& settings);
nlohmann::json report_to_json(const EstimateReport& report,
                              const nlohmann::json& resolved_config);

}  // namespace noisyrd
