#pragma once

#include "costa/datagen.hpp"
#include "costa/eval.hpp"
#include "costa/integrate.hpp"
#include "costa/nn.hpp"
#include "costa/norm.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace costa {

using Json = nlohmann::ordered_json;

/// Shortest decimal that round-trips exactly.
[[nodiscard]] std::string format_double(double v);
[[nodiscard]] double parse_double(const std::string& s);

void write_text(const std::filesystem::path& path, const std::string& text);
[[nodiscard]] std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
[[nodiscard]] Json read_json(const std::filesystem::path& path);

// ============================================================================
// Trajectories and datasets
// ============================================================================

/// Header t,x1..x8,u1..u5,g1; one row per step.
[[nodiscard]] std::string trajectory_csv(const Trajectory& t);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t);
[[nodiscard]] Trajectory read_trajectory_csv(const std::filesystem::path& path);

[[nodiscard]] Json norm_to_json(const NormStats& n);
[[nodiscard]] NormStats norm_from_json(const Json& j);

/// Header f1..f13,t1..t8 with raw (unstandardized) values; the norm-stats
/// sidecar is written next to it with a .json extension.
void write_dataset(const std::filesystem::path& csv_path, const RegressionDataset& ds);
[[nodiscard]] RegressionDataset read_dataset(const std::filesystem::path& csv_path);

// ============================================================================
// Models
// ============================================================================

[[nodiscard]] Json train_config_to_json(const TrainConfig& c);
[[nodiscard]] TrainConfig train_config_from_json(const Json& j);

[[nodiscard]] Json mlp_to_json(const MlpParameters<double>& p);
[[nodiscard]] MlpParameters<double> mlp_from_json(const Json& j);

// ============================================================================
// Reports
// ============================================================================

[[nodiscard]] Json report_to_json(const ForecastReport& r);
[[nodiscard]] std::string runs_csv(const ForecastReport& r);

}  // namespace costa
