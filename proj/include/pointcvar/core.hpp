#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pointcvar/error.hpp"

namespace pcvar {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;

  Point3& operator+=(const Point3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Point3& operator-=(const Point3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Point3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend Point3 operator+(Point3 a, const Point3& b) { return a += b; }
  friend Point3 operator-(Point3 a, const Point3& b) { return a -= b; }
  friend Point3 operator*(Point3 a, double s) { return a *= s; }
  friend Point3 operator*(double s, Point3 a) { return a *= s; }

  double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Point3& a, const Point3& b) { return (a - b).norm(); }

enum class Provenance : std::uint8_t { Clean, Outlier };

/// Ordered points with optional per-point provenance and class label.
///
/// Provenance is only used for evaluation (recall, clean retention); when it
/// is present its length always equals the point count.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> points,
                      std::optional<std::vector<Provenance>> provenance = std::nullopt,
                      std::optional<int> label = std::nullopt);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  const std::vector<Point3>& points() const noexcept { return points_; }
  const Point3& operator[](std::size_t i) const { return points_[i]; }

  bool has_provenance() const noexcept { return provenance_.has_value(); }
  const std::optional<std::vector<Provenance>>& provenance() const noexcept { return provenance_; }
  /// Provenance of point i; Clean when the cloud carries no flags.
  Provenance provenance_at(std::size_t i) const {
    return provenance_ ? (*provenance_)[i] : Provenance::Clean;
  }

  const std::optional<int>& label() const noexcept { return label_; }
  void set_label(std::optional<int> label) { label_ = label; }

  std::size_t count(Provenance p) const;

  /// Sub-cloud of the given indices, in the order given. Label carried over.
  PointCloud select(std::span<const std::size_t> indices) const;

  /// Appends points carrying the given flag. A cloud without provenance
  /// gains an all-Clean column first.
  PointCloud append(std::span<const Point3> extra, Provenance flag) const;

  PointCloud with_provenance_all(Provenance p) const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Point3> points_;
  std::optional<std::vector<Provenance>> provenance_;
  std::optional<int> label_;
};

enum class Split { Train, Test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view s);

struct Dataset {
  std::vector<PointCloud> clouds;
  std::vector<std::string> class_names;
  Split split = Split::Train;

  std::size_t size() const noexcept { return clouds.size(); }
  std::size_t n_classes() const noexcept { return class_names.size(); }

  /// Throws unless every cloud has a label indexing class_names.
  void validate() const;
};

enum class ShapeKind { Sphere, Cube, Cylinder, Torus };

inline constexpr ShapeKind kAllShapes[] = {ShapeKind::Sphere, ShapeKind::Cube,
                                           ShapeKind::Cylinder, ShapeKind::Torus};

std::string_view to_string(ShapeKind kind);
ShapeKind shape_from_string(std::string_view s);

// Canonical sizes of the primitives.
inline constexpr double kCylinderRadius = 0.6;
inline constexpr double kCylinderHalfHeight = 0.8;
inline constexpr double kTorusMajor = 1.0;
inline constexpr double kTorusMinor = 0.3;

class Rng;

/// Uniform surface samples of a canonical primitive centred at the origin:
/// unit sphere, cube [-1,1]^3, cylinder of radius 0.6 and half height 0.8
/// (caps included), torus with radii 1 and 0.3 around the z axis.
PointCloud generate_shape(ShapeKind kind, std::size_t n_points, Rng& rng);

/// Centre on the centroid, then scale so the farthest point has norm 1.
/// An all-identical cloud maps to all zeros.
PointCloud normalize_unit_sphere(const PointCloud& cloud);

Point3 centroid(std::span<const Point3> points);

struct ShapeDatasetOptions {
  std::size_t n_per_class = 100;
  std::size_t n_points = 1024;
  /// Per-axis scale factors drawn from [1 - jitter, 1 + jitter] before
  /// normalisation, so clouds within a class are not identical.
  double scale_jitter = 0.15;
};

/// Normalised, labelled clouds of all four shapes, interleaved by class.
Dataset make_shape_dataset(const ShapeDatasetOptions& opts, Split split, Rng& rng);

}  // namespace pcvar
