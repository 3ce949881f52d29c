#pragma once

#include "costa/datagen.hpp"
#include "costa/eval.hpp"
#include "costa/io.hpp"
#include "costa/nn.hpp"
#include "costa/predictor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace costa {

/// A trained model family, named "<ddm|costa>_<dense|sparse>".
struct ModelTypeConfig {
    std::string name;
    ModelKind kind = ModelKind::DDM;
    bool sparse = false;
};

[[nodiscard]] ModelTypeConfig model_type_from_name(const std::string& name);

struct ExperimentConfig {
    std::uint64_t seed = 0;
    CorpusConfig corpus;
    TrainConfig training;  ///< shared settings; lambda and seed are set per model
    double dense_lambda = 0.0;
    double sparse_lambda = 1e-4;
    std::vector<int> layer_sizes = default_layer_sizes();
    std::vector<std::string> model_types{"ddm_dense", "ddm_sparse", "costa_dense", "costa_sparse"};
    int instances = 10;
    std::vector<Eigen::Index> horizons{1000, 3000, 5000};
    bool include_pbm = true;
    std::filesystem::path out_dir = "costa_out";
    /// Thread count; never affects outputs and is not echoed.
    std::size_t workers = 1;
};

/// Full resolved configuration. The worker count and output directory never
/// affect results and are left out so artifacts compare across locations.
[[nodiscard]] Json config_to_json(const ExperimentConfig& c);
/// Fields absent from `j` keep the values already in `base`.
[[nodiscard]] ExperimentConfig config_from_json(const Json& j, ExperimentConfig base = {});
void validate(const ExperimentConfig& c);

/// Training settings of one instance, with lambda and seed resolved.
[[nodiscard]] TrainConfig instance_train_config(const ExperimentConfig& c, const ModelTypeConfig& type, int instance);

// ============================================================================
// Artifact layout under out_dir
// ============================================================================

[[nodiscard]] std::filesystem::path train_trajectory_path(const ExperimentConfig& c, int index);
[[nodiscard]] std::filesystem::path test_trajectory_path(const ExperimentConfig& c, int index);
[[nodiscard]] std::filesystem::path dataset_path(const ExperimentConfig& c, TargetKind kind);
[[nodiscard]] std::filesystem::path model_path(const ExperimentConfig& c, const std::string& type, int instance);
[[nodiscard]] std::filesystem::path report_path(const ExperimentConfig& c);
[[nodiscard]] std::filesystem::path runs_path(const ExperimentConfig& c);
[[nodiscard]] std::filesystem::path plots_dir(const ExperimentConfig& c);

// ============================================================================
// Commands
// ============================================================================

/// Trajectory CSVs plus both datasets with their norm-stats sidecars.
void cmd_gen_data(const ExperimentConfig& c);

/// One instance of one model type.
void cmd_train(const ExperimentConfig& c, const std::string& type, int instance);

/// Every configured type and instance.
void cmd_train_all(const ExperimentConfig& c);

[[nodiscard]] ForecastReport cmd_eval(const ExperimentConfig& c);

/// Sorted per-type AN-RFMSE lists and blow-up bar data as CSV.
void cmd_report(const ExperimentConfig& c);

void run_pipeline(const ExperimentConfig& c);

/// Statistics recomputed from the plot files written by cmd_report.
struct ReportedSeries {
    std::string type;
    Eigen::Index horizon;
    std::size_t blowup_count;
    std::size_t n;
    std::vector<double> values;
};
[[nodiscard]] std::vector<ReportedSeries> read_plot_data(const ExperimentConfig& c);

}  // namespace costa
