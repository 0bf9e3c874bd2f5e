#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "pointcvar/core.hpp"
#include "pointcvar/model.hpp"
#include "pointcvar/rng.hpp"

namespace pcvar {

enum class NoiseMode { None, Global, Local, Cluster, Trigger, AdvAdd };

std::string_view to_string(NoiseMode m);
NoiseMode noise_mode_from_string(std::string_view s);

struct NoiseSpec {
  NoiseMode mode = NoiseMode::None;
  std::size_t count = 0;       // points added per cloud
  /// Global: ball radius around the origin (default 1). Local: patch radius
  /// around the anchor point (default 0.1). Cluster: radius of each cluster.
  std::optional<double> region;
  std::size_t n_clusters = 3;  // Cluster: count is split evenly across clusters
  Point3 trigger_center{0.7, 0.7, 0.7};
  double trigger_radius = 0.05;
  std::optional<int> target_label;
  double adv_step = 0.01;
  std::size_t adv_iters = 50;
  std::uint64_t seed = 0;

  /// Throws on inconsistent fields.
  void validate() const;
  double region_or_default() const;
};

inline constexpr std::size_t kDefaultTriggerPoints = 30;

/// Global: uniform in the ball of radius region around the origin. Local:
/// uniform within region of one randomly chosen cloud point.
PointCloud add_random_outliers(const PointCloud& cloud, const NoiseSpec& spec, Rng& rng);

/// Cluster centres uniform in the shell 0.8 <= |c| <= 1.2, points uniform in
/// a ball of cluster_radius around each centre.
PointCloud add_cluster_outliers(const PointCloud& cloud, std::size_t n_clusters, std::size_t points_per_cluster,
                                double cluster_radius, Rng& rng);

/// The trigger point set of a spec. Depends only on the spec (and its seed).
std::vector<Point3> trigger_points(const NoiseSpec& spec);

PointCloud inject_backdoor_trigger(const PointCloud& cloud, const NoiseSpec& spec);

/// Injects the trigger into ceil(rate * |data|) clouds drawn uniformly from
/// those not already labelled target_label, and relabels them.
Dataset poison_dataset(const Dataset& data, const NoiseSpec& spec, double poison_rate, int target_label, Rng& rng);

/// Signed-gradient ascent on the true-class cross-entropy with respect to
/// n_add added points, started at copies of the highest-risk clean points
/// and clipped to the unit ball. The cloud must carry a label.
PointCloud adv_point_addition(const ClassifierModel& model, const PointCloud& cloud, std::size_t n_add,
                              double step_size, std::size_t n_iters);

/// Applies any spec to one cloud. rng drives the random modes; Trigger uses
/// only the spec seed. AdvAdd needs the model.
PointCloud corrupt_cloud(const PointCloud& cloud, const NoiseSpec& spec, Rng& rng,
                         const ClassifierModel* model = nullptr);

/// Corrupts every cloud with an independent stream derived from spec.seed
/// and the cloud index, so the result does not depend on evaluation order.
Dataset corrupt_dataset(const Dataset& data, const NoiseSpec& spec, const ClassifierModel* model = nullptr);

}  // namespace pcvar
