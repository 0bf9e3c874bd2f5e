#include "pointcvar/removal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pointcvar/error.hpp"
#include "pointcvar/kernels.hpp"
#include "pointcvar/optimize.hpp"

namespace pcvar {

std::string_view to_string(RemovalMethod m) {
  switch (m) {
    case RemovalMethod::Vanilla: return "vanilla";
    case RemovalMethod::Multistep: return "multistep";
    case RemovalMethod::RS: return "rs";
    case RemovalMethod::SOR: return "sor";
    case RemovalMethod::ROR: return "ror";
  }
  return "?";
}

RemovalMethod removal_method_from_string(std::string_view s) {
  if (s == "vanilla") return RemovalMethod::Vanilla;
  if (s == "multistep") return RemovalMethod::Multistep;
  if (s == "rs") return RemovalMethod::RS;
  if (s == "sor") return RemovalMethod::SOR;
  if (s == "ror") return RemovalMethod::ROR;
  fail(ErrorCode::InvalidArgument, "unknown removal method '" + std::string(s) +
                                       "' (expected vanilla, multistep, rs, sor or ror)");
}

void RemovalConfig::validate() const {
  require(delta > 0.0 && delta <= 1.0, "removal: delta must lie in (0, 1]");
  require(steps >= 1, "removal: steps must be >= 1");
  require(score.lambda >= 0.0, "removal: lambda must be >= 0");
  require(alpha >= 0.0 && alpha < 1.0, "removal: alpha must lie in [0, 1)");
  require(sor_k >= 1, "removal: sor_k must be >= 1");
  require(!(sor_std_mult < 0.0), "removal: sor_std_mult must be >= 0");
  require(ror_radius > 0.0, "removal: ror_radius must be > 0");
}

namespace {

RemovalResult keep_indices(const PointCloud& cloud, std::vector<std::size_t> kept) {
  RemovalResult r;
  r.cloud = cloud.select(kept);
  r.kept = std::move(kept);
  r.steps_run = 1;
  return r;
}

RemovalResult risk_round(const ClassifierModel& model, const PointCloud& cloud, const ScoreConfig& score,
                         double rate) {
  const auto risks = point_risks(model, cloud, score);
  return keep_indices(cloud, sort_select(risks.final, rate).indices());
}

}  // namespace

RemovalResult remove_vanilla(const ClassifierModel& model, const PointCloud& cloud, const RemovalConfig& cfg) {
  cfg.validate();
  if (cfg.delta == 1.0) {
    std::vector<std::size_t> all(cloud.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return keep_indices(cloud, std::move(all));
  }
  return risk_round(model, cloud, cfg.score, cfg.delta);
}

RemovalResult remove_multistep(const ClassifierModel& model, const PointCloud& cloud, const RemovalConfig& cfg) {
  cfg.validate();
  if (cfg.steps == 1) return remove_vanilla(model, cloud, cfg);
  const double rate = std::pow(cfg.delta, 1.0 / static_cast<double>(cfg.steps));
  RemovalResult out;
  out.cloud = cloud;
  out.kept.resize(cloud.size());
  std::iota(out.kept.begin(), out.kept.end(), std::size_t{0});
  if (cfg.delta == 1.0) {
    out.steps_run = cfg.steps;
    return out;
  }
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (cfg.score.lambda > 0.0 && out.cloud.size() < cfg.score.k_neighbors + 1) {
      out.stopped_early = true;
      out.warning = "multistep stopped after " + std::to_string(step) + " of " + std::to_string(cfg.steps) +
                    " steps: cloud has " + std::to_string(out.cloud.size()) + " points";
      break;
    }
    auto round = risk_round(model, out.cloud, cfg.score, rate);
    std::vector<std::size_t> kept(round.kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = out.kept[round.kept[i]];
    out.kept = std::move(kept);
    out.cloud = std::move(round.cloud);
    out.steps_run = step + 1;
  }
  return out;
}

RemovalResult baseline_rs(const PointCloud& cloud, std::size_t n_keep, Rng& rng) {
  require(n_keep >= 1, "rs: n_keep must be >= 1");
  require(n_keep <= cloud.size(), "rs: n_keep (" + std::to_string(n_keep) + ") exceeds cloud size (" +
                                      std::to_string(cloud.size()) + ")");
  // Partial Fisher-Yates over the index array.
  std::vector<std::size_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < n_keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n_keep);
  std::sort(idx.begin(), idx.end());
  return keep_indices(cloud, std::move(idx));
}

RemovalResult baseline_sor(const PointCloud& cloud, std::size_t k, double std_mult) {
  require(k >= 1, "sor: k must be >= 1");
  require(cloud.size() > k, "sor: cloud needs more than k points");
  require(!(std_mult < 0.0), "sor: std_mult must be >= 0");
  const auto table = kernels::knn(cloud.points(), k);
  const auto& d = table.mean_distance;
  const double n = static_cast<double>(d.size());
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  std::vector<std::size_t> kept;
  if (std::isinf(std_mult) || sd == 0.0) {
    kept.resize(d.size());
    std::iota(kept.begin(), kept.end(), std::size_t{0});
  } else {
    const double threshold = mean + std_mult * sd;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(d[i] > threshold)) kept.push_back(i);
    }
  }
  return keep_indices(cloud, std::move(kept));
}

RemovalResult baseline_ror(const PointCloud& cloud, double radius, std::size_t min_neighbors) {
  require(radius > 0.0, "ror: radius must be > 0");
  std::vector<std::size_t> kept;
  if (min_neighbors == 0) {
    kept.resize(cloud.size());
    std::iota(kept.begin(), kept.end(), std::size_t{0});
  } else {
    const auto counts = kernels::radius_counts(cloud.points(), radius);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] >= min_neighbors) kept.push_back(i);
    }
  }
  return keep_indices(cloud, std::move(kept));
}

RemovalResult apply_removal(const PointCloud& cloud, const RemovalConfig& cfg, const ClassifierModel& model) {
  cfg.validate();
  switch (cfg.method) {
    case RemovalMethod::Vanilla: return remove_vanilla(model, cloud, cfg);
    case RemovalMethod::Multistep: return remove_multistep(model, cloud, cfg);
    case RemovalMethod::RS: {
      Rng rng(cfg.rs_seed);
      return baseline_rs(cloud, retention_count(cfg.delta, cloud.size()), rng);
    }
    case RemovalMethod::SOR: return baseline_sor(cloud, cfg.sor_k, cfg.sor_std_mult);
    case RemovalMethod::ROR: return baseline_ror(cloud, cfg.ror_radius, cfg.ror_min_neighbors);
  }
  fail(ErrorCode::InvalidArgument, "removal: unknown method");
}

}  // namespace pcvar
