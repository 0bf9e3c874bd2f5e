#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixture.hpp"
#include "pointcvar/noise.hpp"
#include "pointcvar/optimize.hpp"
#include "pointcvar/removal.hpp"

using namespace pcvar;

namespace {

PointCloud grid(int side, double spacing) {
  std::vector<Point3> pts;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) pts.push_back({i * spacing, j * spacing, 0.0});
  }
  return PointCloud(std::move(pts));
}

const ClassifierModel& small_model() {
  static const ClassifierModel m = [] {
    Rng r(51);
    return build_classifier(kDefaultTrunk, 4, r);
  }();
  return m;
}

PointCloud sphere(std::size_t n, std::uint64_t seed) {
  Rng r(seed);
  return generate_shape(ShapeKind::Sphere, n, r);
}

}  // namespace

TEST_CASE("vanilla removal contract") {
  const auto c = sphere(200, 52);
  RemovalConfig cfg;
  cfg.delta = 1.0;
  CHECK(remove_vanilla(small_model(), c, cfg).cloud == c);
  for (double d : {0.95, 0.9, 0.5, 0.123}) {
    cfg.delta = d;
    const auto r = remove_vanilla(small_model(), c, cfg);
    CHECK(r.cloud.size() == retention_count(d, c.size()));
    CHECK(r.kept.size() == r.cloud.size());
    for (std::size_t i = 0; i < r.kept.size(); ++i) CHECK(r.cloud[i] == c[r.kept[i]]);
  }
}

TEST_CASE("multistep removal contract") {
  const auto c = sphere(1024, 53);  // at 300 points ceil(0.99744 * 300) keeps all
  RemovalConfig cfg;
  cfg.delta = 0.95;
  cfg.steps = 20;
  CHECK(std::pow(cfg.delta, 1.0 / 20.0) == doctest::Approx(0.997439).epsilon(1e-6));
  const auto r = remove_multistep(small_model(), c, cfg);
  CHECK(r.steps_run == 20);
  CHECK_FALSE(r.stopped_early);
  CHECK(r.cloud.size() < c.size());
  for (std::size_t i = 0; i < r.kept.size(); ++i) CHECK(r.cloud[i] == c[r.kept[i]]);

  cfg.steps = 1;
  CHECK(remove_multistep(small_model(), c, cfg).cloud == remove_vanilla(small_model(), c, cfg).cloud);
}

TEST_CASE("multistep stops when the neighbourhood no longer fits") {
  const auto c = sphere(8, 54);
  RemovalConfig cfg;
  // per-step rate 0.1: the first step keeps 1 point, the second cannot score it
  cfg.delta = 0.01;
  cfg.steps = 2;
  const auto r = remove_multistep(small_model(), c, cfg);
  CHECK(r.stopped_early);
  CHECK(r.steps_run == 1);
  CHECK_FALSE(r.warning.empty());
  CHECK(r.cloud.size() == 1);
}

TEST_CASE("random sampling baseline") {
  const auto c = sphere(100, 55);
  Rng a(1), b(1);
  const auto r1 = baseline_rs(c, 40, a);
  const auto r2 = baseline_rs(c, 40, b);
  CHECK(r1.cloud == r2.cloud);
  CHECK(r1.cloud.size() == 40);
  Rng e(1);
  CHECK(baseline_rs(c, 100, e).cloud == c);
  CHECK_THROWS_AS(baseline_rs(c, 0, e), Error);
  CHECK_THROWS_AS(baseline_rs(c, 101, e), Error);
}

TEST_CASE("statistical outlier removal") {
  SUBCASE("uniform grid loses nothing") {
    const auto g = grid(6, 1.0);
    CHECK(baseline_sor(g, 1, 0.0).cloud.size() == 36);
    CHECK(baseline_sor(g, 1, 2.0).cloud.size() == 36);
  }
  SUBCASE("a far point is removed") {
    const auto g = grid(6, 1.0);
    const std::vector<Point3> far{{100, 0, 0}};
    const auto c = g.append(far, Provenance::Outlier);
    const auto r = baseline_sor(c, 2, 1.0);
    CHECK(r.cloud.count(Provenance::Outlier) == 0);
    CHECK(r.cloud.size() == 36);
  }
  SUBCASE("infinite multiplier is the identity") {
    const auto c = sphere(50, 56);
    CHECK(baseline_sor(c, 4, std::numeric_limits<double>::infinity()).cloud == c);
  }
}

TEST_CASE("radius outlier removal") {
  const auto c = sphere(1024, 57);
  CHECK(baseline_ror(c, 0.1, 0).cloud == c);
  const std::vector<Point3> lone{{10, 0, 0}};
  const auto with = c.append(lone, Provenance::Outlier);
  CHECK(baseline_ror(with, 0.1, 4).cloud.count(Provenance::Outlier) == 0);
  // at this density a 0.1 ball holds ~2.6 neighbours, so most points go
  const auto r = baseline_ror(c, 0.1, 4);
  std::size_t expected = 0;
  for (const auto& p : c.points()) {
    std::size_t n = 0;
    for (const auto& q : c.points()) n += (p - q).norm() <= 0.1;
    expected += n - 1 >= 4;
  }
  CHECK(r.cloud.size() == expected);
}

TEST_CASE("hooks compose left to right") {
  const auto c = sphere(400, 58);
  RemovalConfig sor;
  sor.method = RemovalMethod::SOR;
  RemovalConfig van;
  van.delta = 0.9;
  const auto a = preprocess_hook(c, sor, small_model());
  const auto b = preprocess_hook(a, van, small_model());
  CHECK(a.size() <= c.size());
  CHECK(b.size() <= a.size());
  CHECK(b.size() == retention_count(0.9, a.size()));
}

TEST_CASE("apply_removal dispatch and parsing") {
  CHECK(removal_method_from_string("ror") == RemovalMethod::ROR);
  CHECK_THROWS_AS(removal_method_from_string("median"), Error);
  RemovalConfig cfg;
  cfg.method = RemovalMethod::RS;
  cfg.delta = 0.5;
  CHECK(apply_removal(sphere(10, 59), cfg, small_model()).cloud.size() == 5);
  cfg.delta = 0.0;
  CHECK_THROWS_AS(apply_removal(sphere(10, 59), cfg, small_model()), Error);
}

TEST_CASE("vanilla removes far outliers from a sphere" * doctest::timeout(600)) {
  const auto& desk = fixture::clean_desk();
  const PointCloud& clean = desk.data.test.clouds[0];
  REQUIRE(clean.label() == 0);
  NoiseSpec spec;
  spec.mode = NoiseMode::Global;
  spec.count = 51;   // 5% of 1024
  spec.region = 3.0; // mostly well outside the unit sphere
  Rng rng(60);
  const auto noisy = corrupt_cloud(clean, spec, rng, nullptr);
  RemovalConfig cfg;
  cfg.delta = 0.95;
  const auto r = remove_vanilla(desk.model, noisy, cfg);
  const double removed = 51.0 - static_cast<double>(r.cloud.count(Provenance::Outlier));
  CHECK(removed / 51.0 >= 0.80);
}

TEST_CASE("multistep strips a backdoor trigger better than vanilla" * doctest::timeout(900)) {
  const auto& desk = fixture::poisoned_desk();
  const auto spec = trigger_spec(desk.cfg);
  std::size_t vanilla_left = 0, multi_left = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    const auto triggered = inject_backdoor_trigger(desk.data.test.clouds[i], spec);
    RemovalConfig cfg;
    cfg.delta = 0.95;
    vanilla_left += remove_vanilla(desk.model, triggered, cfg).cloud.count(Provenance::Outlier);
    cfg.method = RemovalMethod::Multistep;
    cfg.steps = 20;
    multi_left += remove_multistep(desk.model, triggered, cfg).cloud.count(Provenance::Outlier);
  }
  CHECK(multi_left < vanilla_left);
}
