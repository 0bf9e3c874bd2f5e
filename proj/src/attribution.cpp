#include "pointcvar/attribution.hpp"

#include <cmath>
#include <cstdio>

#include "pointcvar/kernels.hpp"

namespace pcvar {

std::string_view to_string(ClassScoreKind kind) {
  switch (kind) {
    case ClassScoreKind::CrossEntropy: return "ce";
    case ClassScoreKind::MaxLogit: return "max";
    case ClassScoreKind::SumLogit: return "sum";
  }
  return "?";
}

ClassScoreKind class_score_from_string(std::string_view s) {
  if (s == "ce" || s == "cross_entropy") return ClassScoreKind::CrossEntropy;
  if (s == "max" || s == "max_logit") return ClassScoreKind::MaxLogit;
  if (s == "sum" || s == "sum_logit") return ClassScoreKind::SumLogit;
  fail(ErrorCode::InvalidArgument, "unknown classification score '" + std::string(s) + "'");
}

ScoreSeed classification_score(const FeatureTrace& trace, ClassScoreKind kind) {
  const Vector& z = trace.logits;
  require(z.size() > 0, "classification_score: no logits");
  const std::size_t top = argmax_lowest(z);
  switch (kind) {
    case ClassScoreKind::CrossEntropy:
      return cross_entropy_seed(z, top);
    case ClassScoreKind::MaxLogit: {
      ScoreSeed s{z(static_cast<Eigen::Index>(top)), Vector::Zero(z.size())};
      s.dlogits(static_cast<Eigen::Index>(top)) = 1.0;
      return s;
    }
    case ClassScoreKind::SumLogit:
      return ScoreSeed{z.sum(), Vector::Ones(z.size())};
  }
  fail(ErrorCode::InvalidArgument, "classification_score: unknown kind");
}

GeometricScore geometric_score_with_grad(std::span<const Point3> points, std::size_t k) {
  const std::size_t n = points.size();
  if (n <= k) {
    fail(ErrorCode::InvalidArgument,
         "geometric_score: need N > k (N=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
  }
  const auto table = kernels::knn(points, k);
  const auto& d = table.mean_distance;
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);

  GeometricScore out;
  out.value = std::sqrt(var);
  out.grad = Matrix::Zero(static_cast<Eigen::Index>(n), 3);
  if (out.value == 0.0) return out;

  // dS/dd_i = (d_i - mean) / (N S); the mean's own derivative cancels.
  const double inv = 1.0 / (static_cast<double>(n) * out.value * static_cast<double>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const double coef = (d[i] - mean) * inv;
    if (coef == 0.0) continue;
    for (std::size_t j : table.row(i)) {
      const Point3 diff = points[i] - points[j];
      const double len = diff.norm();
      if (len == 0.0) continue;
      const Point3 u = diff * (coef / len);
      const auto ri = static_cast<Eigen::Index>(i);
      const auto rj = static_cast<Eigen::Index>(j);
      out.grad(ri, 0) += u.x;
      out.grad(ri, 1) += u.y;
      out.grad(ri, 2) += u.z;
      out.grad(rj, 0) -= u.x;
      out.grad(rj, 1) -= u.y;
      out.grad(rj, 2) -= u.z;
    }
  }
  return out;
}

double geometric_score(const PointCloud& cloud, std::size_t k) {
  const std::size_t n = cloud.size();
  if (n <= k) {
    fail(ErrorCode::InvalidArgument,
         "geometric_score: need N > k (N=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
  }
  const auto d = kernels::knn(cloud.points(), k).mean_distance;
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(n));
}

RiskProfile risks_from_gradients(const std::vector<Matrix>& layer_grads) {
  require(!layer_grads.empty(), "risks_from_gradients: no layers");
  const auto n = static_cast<std::size_t>(layer_grads.front().rows());
  RiskProfile p;
  p.final.assign(n, 0.0);
  p.weights.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  for (const Matrix& g : layer_grads) {
    require(static_cast<std::size_t>(g.rows()) == n, "risks_from_gradients: layer row counts differ");
    std::vector<double> raw(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] = g.row(static_cast<Eigen::Index>(i)).norm();
      sq += raw[i] * raw[i];
    }
    const double fro = std::sqrt(sq);
    if (fro > 0.0) {
      for (std::size_t i = 0; i < n; ++i) p.final[i] += raw[i] / fro;
    }
    p.layer_norms.push_back(fro);
    p.per_layer_raw.push_back(std::move(raw));
  }
  const double layers = static_cast<double>(layer_grads.size());
  for (double& r : p.final) r /= layers;
  return p;
}

std::vector<Matrix> scoring_gradients(const ClassifierModel& model, const PointCloud& cloud, const ScoreConfig& cfg,
                                      double* score_value) {
  require(cfg.lambda >= 0.0, "point_risks: lambda must be non-negative");
  require(cfg.scale > 0.0, "point_risks: scale must be positive");
  const auto trace = forward_trace(model, cloud);
  ScoreSeed seed = classification_score(trace, cfg.kind);
  seed.value *= cfg.scale;
  seed.dlogits *= cfg.scale;
  auto grads = backward_point_gradients(model, trace, seed);
  double value = seed.value;
  if (cfg.lambda > 0.0) {
    const auto geo = geometric_score_with_grad(cloud.points(), cfg.k_neighbors);
    grads[0] += (cfg.scale * cfg.lambda) * geo.grad;
    value += cfg.scale * cfg.lambda * geo.value;
  }
  if (score_value) *score_value = value;
  return grads;
}

RiskProfile point_risks(const ClassifierModel& model, const PointCloud& cloud, const ScoreConfig& cfg) {
  double value = 0.0;
  auto p = risks_from_gradients(scoring_gradients(model, cloud, cfg, &value));
  p.score = value;
  return p;
}

std::string format_risk_csv(const PointCloud& cloud, const RiskProfile& risks) {
  require(risks.size() == cloud.size(), "format_risk_csv: risk count != point count");
  std::string out = cloud.has_provenance() ? "index,x,y,z,risk,provenance\n" : "index,x,y,z,risk\n";
  char buf[160];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud[i];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g", i, p.x, p.y, p.z, risks.final[i]);
    out += buf;
    if (cloud.has_provenance()) out += cloud.provenance_at(i) == Provenance::Outlier ? ",outlier" : ",clean";
    out += '\n';
  }
  return out;
}

}  // namespace pcvar
