#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pointcvar/attribution.hpp"
#include "pointcvar/core.hpp"
#include "pointcvar/model.hpp"
#include "pointcvar/noise.hpp"
#include "pointcvar/removal.hpp"
#include "pointcvar/riskmeasure.hpp"

namespace pcvar {

/// Bookkeeping for one processed cloud.
struct CloudOutcome {
  int label = -1;
  std::size_t n_clean = 0;
  std::size_t n_outlier = 0;
  std::size_t kept_clean = 0;
  std::size_t kept_outlier = 0;
  std::size_t pred_clean = 0;
  std::size_t pred_noisy = 0;
  std::size_t pred_removed = 0;
  std::optional<std::size_t> pred_clean_removed;
  double removal_seconds = 0.0;

  std::size_t kept() const { return kept_clean + kept_outlier; }
  /// Fraction of injected points removed; 1 when none were injected.
  double outlier_recall() const;
  double clean_retention() const;
};

struct EvalReport {
  std::size_t n_clouds = 0;
  double acc_clean = 0.0;
  double acc_noisy_raw = 0.0;
  double acc_noisy_removed = 0.0;
  /// Accuracy after applying the removal to the uncorrupted clouds.
  std::optional<double> acc_clean_removed;
  double outlier_recall = 0.0;   // averaged over clouds carrying outliers
  double clean_retention = 0.0;  // averaged over all clouds
  /// Backdoor runs: fraction of triggered non-target clouds predicted as the
  /// target, before and after removal.
  std::optional<double> asr_raw;
  std::optional<double> asr_removed;
  double seconds_per_cloud = 0.0;
  std::vector<CloudOutcome> clouds;
};

struct ProtocolOptions {
  /// Also run the removal on the uncorrupted clouds.
  bool clean_removal = true;
};

/// Removal-and-classification on an in-memory test set: corrupt, remove,
/// classify. Clouds are processed in parallel; results are stored by index.
EvalReport evaluate_protocol(const ClassifierModel& model, const Dataset& test, const NoiseSpec& noise,
                             const RemovalConfig& removal, const ProtocolOptions& opts = {});

struct RunConfig {
  std::filesystem::path test_manifest;
  std::filesystem::path model_path;
  NoiseSpec noise;
  RemovalConfig removal;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;  // empty: write nothing

  /// Checks paths and parameters before any computation.
  void validate() const;
};

/// Loads the model and test split named by cfg, runs the protocol and, when
/// an output directory is set, writes report.json there.
EvalReport run_removal_and_classification(const RunConfig& cfg);

std::string report_to_json(const EvalReport& report, const NoiseSpec& noise, const RemovalConfig& removal);

struct TailTestResult {
  TestReport test;
  std::vector<double> cvar_clean;
  std::vector<double> cvar_noisy;
};

/// CVaR_alpha of point risks for every clean cloud and its corrupted
/// counterpart, then a one-sided paired Wilcoxon test (noisy > clean).
/// Writes "cloud_id,condition,cvar" rows when csv_path is set.
TailTestResult run_hypothesis_test(const ClassifierModel& model, const Dataset& clean_set, const NoiseSpec& spec,
                                   double alpha, const ScoreConfig& score = {},
                                   const std::optional<std::filesystem::path>& csv_path = std::nullopt);

struct SweepRow {
  RemovalMethod method = RemovalMethod::Vanilla;
  double delta = 1.0;
  EvalReport report;
};

/// One row per (method, delta) for Vanilla and Multistep, in that order.
std::vector<SweepRow> sweep_retention(const ClassifierModel& model, const Dataset& test, const NoiseSpec& noise,
                                      const RemovalConfig& base, std::span<const double> deltas);

std::string format_sweep_csv(const std::vector<SweepRow>& rows);

void export_risk_csv(const ClassifierModel& model, const PointCloud& cloud, const ScoreConfig& cfg,
                     const std::filesystem::path& path);

}  // namespace pcvar
