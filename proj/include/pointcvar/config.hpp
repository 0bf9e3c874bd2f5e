#pragma once

#include <cstdint>
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

namespace pcvar {

/// Everything the command-line tool can be configured with.
///
/// The file form is a JSON object of sections; every key is optional and
/// unknown keys are rejected. Overrides use dotted paths, for example
/// "removal.delta=0.92" or "noise.mode=global". See README for the schema.
struct AppConfig {
  std::uint64_t seed = 0;

  ShapeDatasetOptions train_data{100, 1024, 0.15};
  ShapeDatasetOptions test_data{25, 1024, 0.15};

  std::vector<std::size_t> trunk{std::begin(kDefaultTrunk), std::end(kDefaultTrunk)};
  std::vector<std::size_t> head{std::begin(kDefaultHead), std::end(kDefaultHead)};
  TrainConfig train;

  ScoreConfig score;
  NoiseSpec noise;
  /// When set, noise.count is derived as floor(fraction * points per cloud).
  std::optional<double> noise_fraction;
  RemovalConfig removal;

  double poison_rate = 0.05;
  int poison_target = 0;

  double tail_alpha = 0.99;
  std::vector<double> sweep_deltas{1.0, 0.98, 0.95, 0.92, 0.88, 0.8};

  /// Resolves derived fields and checks ranges.
  void finalize();
};

/// Parses a JSON config text and applies "dotted.key=value" overrides on top.
/// Override values are read as JSON when they parse as JSON, else as strings.
AppConfig parse_config(const std::string& text, std::span<const std::string> overrides = {});

AppConfig load_config(const std::optional<std::filesystem::path>& path,
                      std::span<const std::string> overrides = {});

/// Canonical JSON of a config (every key, resolved values).
std::string config_to_json(const AppConfig& cfg);

/// The backdoor trigger used by poison training: the noise section when it
/// already describes a trigger, otherwise the default trigger aimed at
/// poison.target_label.
NoiseSpec trigger_spec(const AppConfig& cfg);

/// Poison-label corruption of a train split per the poison section; the
/// choice of clouds is drawn from a stream seeded by cfg.seed + 3.
Dataset poison_from_config(const AppConfig& cfg, const Dataset& train);

struct DatasetPair {
  Dataset train;
  Dataset test;
};

/// Train then test split, both drawn from one stream seeded by cfg.seed.
DatasetPair make_datasets(const AppConfig& cfg);

/// Fresh initialisation from cfg.train.seed, then SGD per cfg.train.
ClassifierModel train_from_config(const AppConfig& cfg, const Dataset& train, TrainLog* log = nullptr);

}  // namespace pcvar
