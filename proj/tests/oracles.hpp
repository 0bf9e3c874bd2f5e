#pragma once

// Independent reference implementations. Each one follows its defining
// formula by brute force and shares no code with the library routine it
// checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "pointcvar/attribution.hpp"
#include "pointcvar/model.hpp"

namespace oracle {

// Smallest r_i whose cumulative probability P(r <= r_i) reaches alpha.
inline double var_scan(const std::vector<double>& r, const std::vector<double>& p, double alpha) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.size(); ++i) {
    double cdf = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] <= r[i]) cdf += p[j];
    }
    if (cdf >= alpha - 1e-12 && r[i] < best) best = r[i];
  }
  return best;
}

inline double cvar_scan(const std::vector<double>& r, const std::vector<double>& p, double alpha) {
  const double v = var_scan(r, p, alpha);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] >= v) s += p[i] * r[i];
  }
  return s / (1.0 - alpha);
}

// One-sided p-value P(W+ >= observed) by listing all 2^n sign patterns.
inline double wilcoxon_enumerate(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs) {
    if (x != 0.0) d.push_back(x);
  }
  const std::size_t n = d.size();
  // average ranks of |d|
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0.0, same = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) below += 1.0;
      if (std::abs(d[j]) == std::abs(d[i])) same += 1.0;
    }
    rank[i] = below + (same + 1.0) / 2.0;
  }
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0.0) observed += rank[i];
  }
  std::size_t hits = 0;
  const std::size_t total = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < total; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) w += rank[i];
    }
    if (w >= observed - 1e-9) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

// Relaxed retention objective at fixed weights w, minimised over zeta by
// scanning a fine set of candidates that contains every breakpoint.
inline double retention_objective_scan(const std::vector<double>& r, const std::vector<double>& p, double alpha,
                                       const std::vector<double>& w) {
  const double tail = 1.0 / (1.0 - alpha);
  auto f = [&](double zeta) {
    double s = zeta;
    for (std::size_t i = 0; i < r.size(); ++i) s += tail * p[i] * std::max(0.0, w[i] * r[i] - zeta);
    return s;
  };
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.size(); ++i) best = std::min(best, f(w[i] * r[i]));
  return best;
}

// Best binary retention set of exactly n_retain points by full enumeration.
inline std::vector<std::size_t> best_subset(const std::vector<double>& r, const std::vector<double>& p, double alpha,
                                            std::size_t n_retain, double* objective = nullptr) {
  const std::size_t n = r.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> arg;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != n_retain) continue;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = (mask >> i & 1U) ? 1.0 : 0.0;
    const double v = retention_objective_scan(r, p, alpha, w);
    if (v < best - 1e-12) {
      best = v;
      arg.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1U) arg.push_back(i);
      }
    }
  }
  if (objective) *objective = best;
  return arg;
}

// Population standard deviation of mean k-NN distances, all pairs examined.
inline double geometric_brute(const std::vector<pcvar::Point3>& pts, std::size_t k) {
  const std::size_t n = pts.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> dist;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist.push_back(pcvar::distance(pts[i], pts[j]));
    }
    std::sort(dist.begin(), dist.end());
    double s = 0.0;
    for (std::size_t m = 0; m < k; ++m) s += dist[m];
    d[i] = s / static_cast<double>(k);
  }
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(n));
}

inline double log_softmax_ce(const pcvar::Vector& logits, std::size_t target) {
  const double m = logits.maxCoeff();
  double s = 0.0;
  for (Eigen::Index c = 0; c < logits.size(); ++c) s += std::exp(logits(c) - m);
  return m + std::log(s) - logits(static_cast<Eigen::Index>(target));
}

// S_f as a function of the features of designated layer l, with the
// cross-entropy target frozen at `target`.
inline double scoring_at_layer(const pcvar::ClassifierModel& model, std::size_t l, const pcvar::Matrix& features,
                               std::size_t target, double lambda, std::size_t k) {
  double s = log_softmax_ce(pcvar::logits_from_point_features(model, l, features), target);
  if (l == 0 && lambda != 0.0) {
    std::vector<pcvar::Point3> pts(static_cast<std::size_t>(features.rows()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      pts[i] = {features(row, 0), features(row, 1), features(row, 2)};
    }
    s += lambda * geometric_brute(pts, k);
  }
  return s;
}

// Central differences of scoring_at_layer with step h.
inline pcvar::Matrix fd_gradient(const pcvar::ClassifierModel& model, std::size_t l, const pcvar::Matrix& features,
                                 std::size_t target, double lambda, std::size_t k, double h) {
  pcvar::Matrix g(features.rows(), features.cols());
  pcvar::Matrix f = features;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
      const double x = f(i, j);
      f(i, j) = x + h;
      const double up = scoring_at_layer(model, l, f, target, lambda, k);
      f(i, j) = x - h;
      const double down = scoring_at_layer(model, l, f, target, lambda, k);
      f(i, j) = x;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace oracle
