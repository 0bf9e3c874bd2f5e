#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "pointcvar/attribution.hpp"
#include "pointcvar/core.hpp"
#include "pointcvar/model.hpp"
#include "pointcvar/rng.hpp"

namespace pcvar {

enum class RemovalMethod { Vanilla, Multistep, RS, SOR, ROR };

std::string_view to_string(RemovalMethod m);
RemovalMethod removal_method_from_string(std::string_view s);

struct RemovalConfig {
  RemovalMethod method = RemovalMethod::Vanilla;
  double delta = 0.95;
  std::size_t steps = 20;  // Multistep rounds; Vanilla ignores it
  ScoreConfig score;       // lambda and scorer used for point risks
  double alpha = 0.99;     // tail level for reported CVaR
  std::size_t sor_k = 4;
  double sor_std_mult = 1.0;
  double ror_radius = 0.1;
  std::size_t ror_min_neighbors = 4;
  std::uint64_t rs_seed = 0;

  /// Throws on out-of-range fields.
  void validate() const;
};

/// A processed cloud plus the input indices it kept, in input order.
struct RemovalResult {
  PointCloud cloud;
  std::vector<std::size_t> kept;
  std::size_t steps_run = 0;
  bool stopped_early = false;
  std::string warning;
};

RemovalResult remove_vanilla(const ClassifierModel& model, const PointCloud& cloud, const RemovalConfig& cfg);

/// cfg.steps rounds, each recomputing risks on the current cloud and keeping
/// ceil(delta^(1/steps) * N_current) points. Stops early, with a warning,
/// once the cloud is too small for the geometric score.
RemovalResult remove_multistep(const ClassifierModel& model, const PointCloud& cloud, const RemovalConfig& cfg);

/// Uniform sample without replacement, input order preserved.
RemovalResult baseline_rs(const PointCloud& cloud, std::size_t n_keep, Rng& rng);

/// Drops points whose mean k-NN distance exceeds mean + std_mult * std of
/// that statistic over the cloud. std_mult = +inf is a no-op.
RemovalResult baseline_sor(const PointCloud& cloud, std::size_t k, double std_mult);

/// Drops points with fewer than min_neighbors other points within radius.
RemovalResult baseline_ror(const PointCloud& cloud, double radius, std::size_t min_neighbors);

/// Uniform entry point used in front of any classifier.
RemovalResult apply_removal(const PointCloud& cloud, const RemovalConfig& cfg, const ClassifierModel& model);

inline PointCloud preprocess_hook(const PointCloud& cloud, const RemovalConfig& cfg, const ClassifierModel& model) {
  return apply_removal(cloud, cfg, model).cloud;
}

}  // namespace pcvar
