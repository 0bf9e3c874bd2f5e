#include "pointcvar/kernels.hpp"

#include <algorithm>
#include <utility>

#include <omp.h>

namespace pcvar::kernels {

namespace {

// Fills row i of the table. `scratch` holds (squared distance, index) pairs.
void knn_row(std::span<const Point3> points, std::size_t k, std::size_t i,
             std::vector<std::pair<double, std::size_t>>& scratch, KnnTable& out) {
  const std::size_t n = points.size();
  scratch.clear();
  const Point3 p = points[i];
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    const Point3 d = points[j] - p;
    scratch.emplace_back(d.dot(d), j);
  }
  // Pairs compare by distance then index, which is the tie rule.
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   scratch.end());
  std::sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k));
  double sum = 0.0;
  for (std::size_t m = 0; m < k; ++m) {
    out.neighbors[i * k + m] = scratch[m].second;
    sum += distance(points[scratch[m].second], p);
  }
  out.mean_distance[i] = sum / static_cast<double>(k);
}

KnnTable make_table(std::size_t n, std::size_t k) {
  require(k >= 1, "knn: k must be >= 1");
  require(n > k, "knn: need more than k points (N=" + std::to_string(n) +
                     ", k=" + std::to_string(k) + ")");
  KnnTable t;
  t.k = k;
  t.neighbors.assign(n * k, 0);
  t.mean_distance.assign(n, 0.0);
  return t;
}

std::size_t radius_count_one(std::span<const Point3> points, std::size_t i, double r2) {
  std::size_t c = 0;
  const Point3 p = points[i];
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (j == i) continue;
    const Point3 d = points[j] - p;
    if (d.dot(d) <= r2) ++c;
  }
  return c;
}

}  // namespace

KnnTable knn_serial(std::span<const Point3> points, std::size_t k) {
  KnnTable t = make_table(points.size(), k);
  std::vector<std::pair<double, std::size_t>> scratch;
  scratch.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) knn_row(points, k, i, scratch, t);
  return t;
}

KnnTable knn_omp(std::span<const Point3> points, std::size_t k) {
  KnnTable t = make_table(points.size(), k);
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel
  {
    std::vector<std::pair<double, std::size_t>> scratch;
    scratch.reserve(points.size());
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      knn_row(points, k, static_cast<std::size_t>(i), scratch, t);
    }
  }
  return t;
}

std::vector<std::size_t> radius_counts_serial(std::span<const Point3> points, double radius) {
  std::vector<std::size_t> out(points.size());
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = radius_count_one(points, i, r2);
  return out;
}

std::vector<std::size_t> radius_counts_omp(std::span<const Point3> points, double radius) {
  std::vector<std::size_t> out(points.size());
  const double r2 = radius * radius;
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = radius_count_one(points, static_cast<std::size_t>(i), r2);
  }
  return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace pcvar::kernels
