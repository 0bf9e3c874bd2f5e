#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version used by the
// library and a serial reference kept for testing and benchmarking; the two
// produce identical output because every iteration writes only its own slot.

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#include "pointcvar/core.hpp"

namespace pcvar::kernels {

struct KnnTable {
  std::size_t k = 0;
  /// Row-major N x k neighbour indices, nearest first, ties by lower index.
  std::vector<std::size_t> neighbors;
  /// Mean Euclidean distance to the k neighbours, length N.
  std::vector<double> mean_distance;

  std::span<const std::size_t> row(std::size_t i) const {
    return {neighbors.data() + i * k, k};
  }
};

/// Brute-force k nearest neighbours (self excluded). Requires N > k >= 1.
KnnTable knn_serial(std::span<const Point3> points, std::size_t k);
KnnTable knn_omp(std::span<const Point3> points, std::size_t k);
inline KnnTable knn(std::span<const Point3> points, std::size_t k) { return knn_omp(points, k); }

/// Number of other points within `radius` (inclusive) of each point.
std::vector<std::size_t> radius_counts_serial(std::span<const Point3> points, double radius);
std::vector<std::size_t> radius_counts_omp(std::span<const Point3> points, double radius);
inline std::vector<std::size_t> radius_counts(std::span<const Point3> points, double radius) {
  return radius_counts_omp(points, radius);
}

int max_threads();

/// Runs f(i) for i in [0, n) across threads. Each iteration must write only
/// its own output slot. The exception of the lowest failing index is
/// rethrown once all iterations finish.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < ni; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace pcvar::kernels
