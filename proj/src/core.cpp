#include "pointcvar/core.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "pointcvar/rng.hpp"

namespace pcvar {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Parse: return "parse_error";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::Solver: return "solver_error";
    case ErrorCode::Config: return "config_error";
  }
  return "unknown";
}

ParseError::ParseError(std::string file, std::size_t line, const std::string& detail)
    : Error(ErrorCode::Parse, file + ":" + std::to_string(line) + ": " + detail),
      file_(std::move(file)),
      line_(line) {}

// ---------------------------------------------------------------------------
// Rng

std::uint64_t Rng::below(std::uint64_t n) {
  require(n > 0, "Rng::below: n must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Point3 Rng::unit_vector() {
  const double z = uniform(-1.0, 1.0);
  const double phi = uniform(0.0, 2.0 * std::numbers::pi);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(phi), s * std::sin(phi), z};
}

Point3 Rng::in_ball(double radius) {
  const Point3 dir = unit_vector();
  return dir * (radius * std::cbrt(uniform()));
}

// ---------------------------------------------------------------------------
// PointCloud

PointCloud::PointCloud(std::vector<Point3> points,
                       std::optional<std::vector<Provenance>> provenance,
                       std::optional<int> label)
    : points_(std::move(points)), provenance_(std::move(provenance)), label_(label) {
  if (provenance_ && provenance_->size() != points_.size()) {
    fail(ErrorCode::InvalidArgument, "PointCloud: provenance length " +
                                         std::to_string(provenance_->size()) +
                                         " != point count " + std::to_string(points_.size()));
  }
}

std::size_t PointCloud::count(Provenance p) const {
  if (!provenance_) return p == Provenance::Clean ? points_.size() : 0;
  return static_cast<std::size_t>(std::count(provenance_->begin(), provenance_->end(), p));
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
  std::vector<Point3> pts;
  pts.reserve(indices.size());
  std::optional<std::vector<Provenance>> prov;
  if (provenance_) prov.emplace().reserve(indices.size());
  for (std::size_t i : indices) {
    require(i < points_.size(), "PointCloud::select: index out of range");
    pts.push_back(points_[i]);
    if (prov) prov->push_back((*provenance_)[i]);
  }
  return PointCloud(std::move(pts), std::move(prov), label_);
}

PointCloud PointCloud::append(std::span<const Point3> extra, Provenance flag) const {
  std::vector<Point3> pts = points_;
  pts.insert(pts.end(), extra.begin(), extra.end());
  std::vector<Provenance> prov =
      provenance_ ? *provenance_ : std::vector<Provenance>(points_.size(), Provenance::Clean);
  prov.insert(prov.end(), extra.size(), flag);
  return PointCloud(std::move(pts), std::move(prov), label_);
}

PointCloud PointCloud::with_provenance_all(Provenance p) const {
  return PointCloud(points_, std::vector<Provenance>(points_.size(), p), label_);
}

// ---------------------------------------------------------------------------
// Dataset

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  fail(ErrorCode::InvalidArgument, "unknown split '" + std::string(s) + "'");
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const auto& label = clouds[i].label();
    if (!label) fail(ErrorCode::InvalidArgument, "dataset cloud " + std::to_string(i) + " has no label");
    if (*label < 0 || static_cast<std::size_t>(*label) >= class_names.size()) {
      fail(ErrorCode::InvalidArgument, "dataset cloud " + std::to_string(i) + " label " +
                                           std::to_string(*label) + " outside class range");
    }
  }
}

// ---------------------------------------------------------------------------
// Shapes

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Cube: return "cube";
    case ShapeKind::Cylinder: return "cylinder";
    case ShapeKind::Torus: return "torus";
  }
  return "?";
}

ShapeKind shape_from_string(std::string_view s) {
  for (ShapeKind k : kAllShapes) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::InvalidArgument, "unknown shape kind '" + std::string(s) + "'");
}

namespace {

Point3 sample_cube(Rng& rng) {
  const auto face = rng.below(6);
  const double u = rng.uniform(-1.0, 1.0);
  const double v = rng.uniform(-1.0, 1.0);
  const double s = (face % 2 == 0) ? 1.0 : -1.0;
  switch (face / 2) {
    case 0: return {s, u, v};
    case 1: return {u, s, v};
    default: return {u, v, s};
  }
}

Point3 sample_cylinder(Rng& rng) {
  constexpr double r = kCylinderRadius;
  constexpr double h = kCylinderHalfHeight;
  const double side = 2.0 * std::numbers::pi * r * (2.0 * h);
  const double caps = 2.0 * std::numbers::pi * r * r;
  const double pick = rng.uniform() * (side + caps);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  if (pick < side) {
    return {r * std::cos(phi), r * std::sin(phi), rng.uniform(-h, h)};
  }
  const double rho = r * std::sqrt(rng.uniform());
  const double z = (pick - side < caps / 2.0) ? h : -h;
  return {rho * std::cos(phi), rho * std::sin(phi), z};
}

Point3 sample_torus(Rng& rng) {
  constexpr double R = kTorusMajor;
  constexpr double r = kTorusMinor;
  // Area element is proportional to R + r cos(theta).
  double theta;
  do {
    theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  } while (rng.uniform() * (R + r) > R + r * std::cos(theta));
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double ring = R + r * std::cos(theta);
  return {ring * std::cos(phi), ring * std::sin(phi), r * std::sin(theta)};
}

}  // namespace

PointCloud generate_shape(ShapeKind kind, std::size_t n_points, Rng& rng) {
  require(n_points >= 8, "generate_shape: n_points must be >= 8");
  std::vector<Point3> pts;
  pts.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    switch (kind) {
      case ShapeKind::Sphere: pts.push_back(rng.unit_vector()); break;
      case ShapeKind::Cube: pts.push_back(sample_cube(rng)); break;
      case ShapeKind::Cylinder: pts.push_back(sample_cylinder(rng)); break;
      case ShapeKind::Torus: pts.push_back(sample_torus(rng)); break;
      default: fail(ErrorCode::InvalidArgument, "generate_shape: unknown kind");
    }
  }
  return PointCloud(std::move(pts), std::vector<Provenance>(n_points, Provenance::Clean));
}

Point3 centroid(std::span<const Point3> points) {
  Point3 c;
  for (const auto& p : points) c += p;
  if (!points.empty()) c *= 1.0 / static_cast<double>(points.size());
  return c;
}

PointCloud normalize_unit_sphere(const PointCloud& cloud) {
  require(!cloud.empty(), "normalize_unit_sphere: empty cloud");
  for (const auto& p : cloud.points()) {
    if (!p.finite()) fail(ErrorCode::NonFinite, "normalize_unit_sphere: non-finite coordinate");
  }
  const Point3 c = centroid(cloud.points());
  std::vector<Point3> pts;
  pts.reserve(cloud.size());
  double max_norm = 0.0;
  for (const auto& p : cloud.points()) {
    pts.push_back(p - c);
    max_norm = std::max(max_norm, pts.back().norm());
  }
  if (max_norm > 0.0) {
    for (auto& p : pts) p *= 1.0 / max_norm;
    // Scaling shifts the centroid by rounding; recentre so it stays at zero.
    const Point3 c2 = centroid(pts);
    for (auto& p : pts) p -= c2;
  } else {
    std::fill(pts.begin(), pts.end(), Point3{});
  }
  return PointCloud(std::move(pts), cloud.provenance(), cloud.label());
}

Dataset make_shape_dataset(const ShapeDatasetOptions& opts, Split split, Rng& rng) {
  Dataset ds;
  ds.split = split;
  for (ShapeKind k : kAllShapes) ds.class_names.emplace_back(to_string(k));
  ds.clouds.reserve(opts.n_per_class * ds.class_names.size());
  for (std::size_t i = 0; i < opts.n_per_class; ++i) {
    for (std::size_t c = 0; c < std::size(kAllShapes); ++c) {
      PointCloud raw = generate_shape(kAllShapes[c], opts.n_points, rng);
      const double sx = rng.uniform(1.0 - opts.scale_jitter, 1.0 + opts.scale_jitter);
      const double sy = rng.uniform(1.0 - opts.scale_jitter, 1.0 + opts.scale_jitter);
      const double sz = rng.uniform(1.0 - opts.scale_jitter, 1.0 + opts.scale_jitter);
      std::vector<Point3> pts = raw.points();
      for (auto& p : pts) p = {p.x * sx, p.y * sy, p.z * sz};
      PointCloud scaled(std::move(pts), raw.provenance(), static_cast<int>(c));
      ds.clouds.push_back(normalize_unit_sphere(scaled));
    }
  }
  return ds;
}

}  // namespace pcvar
