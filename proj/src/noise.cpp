#include "pointcvar/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pointcvar/attribution.hpp"
#include "pointcvar/error.hpp"
#include "pointcvar/kernels.hpp"

namespace pcvar {

std::string_view to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::None: return "none";
    case NoiseMode::Global: return "global";
    case NoiseMode::Local: return "local";
    case NoiseMode::Cluster: return "cluster";
    case NoiseMode::Trigger: return "trigger";
    case NoiseMode::AdvAdd: return "advadd";
  }
  return "?";
}

NoiseMode noise_mode_from_string(std::string_view s) {
  if (s == "none") return NoiseMode::None;
  if (s == "global") return NoiseMode::Global;
  if (s == "local") return NoiseMode::Local;
  if (s == "cluster") return NoiseMode::Cluster;
  if (s == "trigger") return NoiseMode::Trigger;
  if (s == "advadd") return NoiseMode::AdvAdd;
  fail(ErrorCode::InvalidArgument, "unknown noise mode '" + std::string(s) +
                                       "' (expected none, global, local, cluster, trigger or advadd)");
}

void NoiseSpec::validate() const {
  if (region) require(*region >= 0.0 && std::isfinite(*region), "noise: region must be finite and >= 0");
  require(trigger_center.finite(), "noise: trigger centre must be finite");
  require(trigger_radius >= 0.0 && std::isfinite(trigger_radius), "noise: trigger radius must be >= 0");
  if (mode == NoiseMode::Trigger) require(count >= 1, "noise: trigger needs at least one point");
  if (mode == NoiseMode::Cluster) require(n_clusters >= 1, "noise: n_clusters must be >= 1");
  require(adv_step >= 0.0, "noise: adv_step must be >= 0");
}

double NoiseSpec::region_or_default() const {
  if (region) return *region;
  switch (mode) {
    case NoiseMode::Global: return 1.0;
    case NoiseMode::Local: return 0.1;
    case NoiseMode::Cluster: return 0.05;
    default: return 0.0;
  }
}

PointCloud add_random_outliers(const PointCloud& cloud, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  require(spec.mode == NoiseMode::Global || spec.mode == NoiseMode::Local,
          "add_random_outliers: mode must be global or local");
  if (spec.count == 0) return cloud;
  const double radius = spec.region_or_default();
  Point3 anchor{};
  if (spec.mode == NoiseMode::Local) {
    require(!cloud.empty(), "add_random_outliers: local noise needs a non-empty cloud");
    anchor = cloud[static_cast<std::size_t>(rng.below(cloud.size()))];
  }
  std::vector<Point3> extra(spec.count);
  for (auto& p : extra) p = anchor + rng.in_ball(radius);
  return cloud.append(extra, Provenance::Outlier);
}

PointCloud add_cluster_outliers(const PointCloud& cloud, std::size_t n_clusters, std::size_t points_per_cluster,
                                double cluster_radius, Rng& rng) {
  require(n_clusters >= 1, "add_cluster_outliers: n_clusters must be >= 1");
  require(cluster_radius >= 0.0, "add_cluster_outliers: cluster_radius must be >= 0");
  constexpr double kInner = 0.8, kOuter = 1.2;
  std::vector<Point3> extra;
  extra.reserve(n_clusters * points_per_cluster);
  for (std::size_t c = 0; c < n_clusters; ++c) {
    // Radius with density proportional to r^2 gives a uniform shell.
    const double lo3 = kInner * kInner * kInner, hi3 = kOuter * kOuter * kOuter;
    const double r = std::cbrt(rng.uniform(lo3, hi3));
    const Point3 centre = rng.unit_vector() * r;
    for (std::size_t i = 0; i < points_per_cluster; ++i) {
      extra.push_back(cluster_radius == 0.0 ? centre : centre + rng.in_ball(cluster_radius));
    }
  }
  return cloud.append(extra, Provenance::Outlier);
}

std::vector<Point3> trigger_points(const NoiseSpec& spec) {
  Rng rng(spec.seed);
  std::vector<Point3> pts(spec.count);
  for (auto& p : pts) p = spec.trigger_center + rng.unit_vector() * spec.trigger_radius;
  return pts;
}

PointCloud inject_backdoor_trigger(const PointCloud& cloud, const NoiseSpec& spec) {
  spec.validate();
  require(spec.count >= 1, "inject_backdoor_trigger: count must be >= 1");
  return cloud.append(trigger_points(spec), Provenance::Outlier);
}

Dataset poison_dataset(const Dataset& data, const NoiseSpec& spec, double poison_rate, int target_label, Rng& rng) {
  require(data.split == Split::Train, "poison_dataset: expects a train split");
  require(poison_rate > 0.0 && poison_rate < 1.0, "poison_dataset: rate must lie in (0, 1)");
  require(target_label >= 0 && static_cast<std::size_t>(target_label) < data.n_classes(),
          "poison_dataset: target label out of range");
  const auto n_poison = static_cast<std::size_t>(std::ceil(poison_rate * static_cast<double>(data.size()) - 1e-9));
  if (n_poison == 0) fail(ErrorCode::InvalidArgument, "poison_dataset: rate selects zero clouds");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.clouds[i].label() != target_label) eligible.push_back(i);
  }
  require(n_poison <= eligible.size(), "poison_dataset: not enough non-target clouds to poison");
  for (std::size_t i = 0; i < n_poison; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }
  Dataset out = data;
  for (std::size_t i = 0; i < n_poison; ++i) {
    auto& c = out.clouds[eligible[i]];
    c = inject_backdoor_trigger(c, spec);
    c.set_label(target_label);
  }
  return out;
}

PointCloud adv_point_addition(const ClassifierModel& model, const PointCloud& cloud, std::size_t n_add,
                              double step_size, std::size_t n_iters) {
  require(n_add >= 1, "adv_point_addition: n_add must be >= 1");
  require(n_add <= cloud.size(), "adv_point_addition: n_add exceeds cloud size");
  require(cloud.label().has_value(), "adv_point_addition: cloud needs a label");
  require(step_size >= 0.0, "adv_point_addition: step_size must be >= 0");
  const auto target = static_cast<std::size_t>(*cloud.label());
  require(target < model.arch().n_classes, "adv_point_addition: label out of range");

  // Seeds: the highest-risk clean points under the classification score.
  ScoreConfig score;
  score.lambda = 0.0;
  const auto risks = point_risks(model, cloud, score);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.provenance_at(i) == Provenance::Clean) order.push_back(i);
  }
  require(order.size() >= n_add, "adv_point_addition: not enough clean points to seed from");
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return risks.final[a] > risks.final[b]; });
  std::vector<Point3> added(n_add);
  for (std::size_t i = 0; i < n_add; ++i) added[i] = cloud[order[i]];

  // The added points go first in the working matrix: the model is
  // permutation invariant, and a copy placed before its original wins the
  // pool's lowest-index tie, so its gradient is not masked at the start.
  Matrix coords(static_cast<Eigen::Index>(n_add + cloud.size()), 3);
  for (std::size_t i = 0; i < n_add + cloud.size(); ++i) {
    const Point3& p = i < n_add ? added[i] : cloud[i - n_add];
    const auto row = static_cast<Eigen::Index>(i);
    coords(row, 0) = p.x;
    coords(row, 1) = p.y;
    coords(row, 2) = p.z;
  }
  auto sign = [](double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); };
  for (std::size_t it = 0; it < n_iters && step_size > 0.0; ++it) {
    const auto trace = forward_trace(model, coords);
    const auto seed = cross_entropy_seed(trace.logits, target);
    const auto grads = backward_point_gradients(model, trace, seed);
    for (std::size_t i = 0; i < n_add; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      Point3 p{coords(row, 0), coords(row, 1), coords(row, 2)};
      p += Point3{sign(grads[0](row, 0)), sign(grads[0](row, 1)), sign(grads[0](row, 2))} * step_size;
      const double norm = p.norm();
      if (norm > 1.0) p *= 1.0 / norm;
      if (!p.finite()) fail(ErrorCode::NonFinite, "adv_point_addition: coordinates diverged");
      coords(row, 0) = p.x;
      coords(row, 1) = p.y;
      coords(row, 2) = p.z;
    }
  }
  for (std::size_t i = 0; i < n_add; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    added[i] = Point3{coords(row, 0), coords(row, 1), coords(row, 2)};
  }
  return cloud.append(added, Provenance::Outlier);
}

PointCloud corrupt_cloud(const PointCloud& cloud, const NoiseSpec& spec, Rng& rng, const ClassifierModel* model) {
  spec.validate();
  switch (spec.mode) {
    case NoiseMode::None: return cloud.has_provenance() ? cloud : cloud.with_provenance_all(Provenance::Clean);
    case NoiseMode::Global:
    case NoiseMode::Local: return add_random_outliers(cloud, spec, rng);
    case NoiseMode::Cluster: {
      const std::size_t per = spec.count / spec.n_clusters;
      require(per * spec.n_clusters == spec.count, "noise: cluster count must divide evenly into n_clusters");
      return add_cluster_outliers(cloud, spec.n_clusters, per, spec.region_or_default(), rng);
    }
    case NoiseMode::Trigger: return inject_backdoor_trigger(cloud, spec);
    case NoiseMode::AdvAdd:
      require(model != nullptr, "noise: advadd needs a model");
      return adv_point_addition(*model, cloud, spec.count, spec.adv_step, spec.adv_iters);
  }
  fail(ErrorCode::InvalidArgument, "noise: unknown mode");
}

Dataset corrupt_dataset(const Dataset& data, const NoiseSpec& spec, const ClassifierModel* model) {
  spec.validate();
  Dataset out = data;
  kernels::parallel_for(data.size(), [&](std::size_t i) {
    Rng rng(spec.seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
    out.clouds[i] = corrupt_cloud(data.clouds[i], spec, rng, model);
  });
  return out;
}

}  // namespace pcvar
