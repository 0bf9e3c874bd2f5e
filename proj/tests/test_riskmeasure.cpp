#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pointcvar/riskmeasure.hpp"
#include "pointcvar/rng.hpp"

using namespace pcvar;

namespace {

RiskSample tenths() {
  std::vector<double> v;
  for (int i = 1; i <= 10; ++i) v.push_back(0.1 * i);
  return RiskSample::uniform(v);
}

}  // namespace

TEST_CASE("VaR examples") {
  CHECK(var_discrete(tenths(), 0.8) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(var_discrete(RiskSample::uniform({2.5, 2.5, 2.5}), 0.37) == 2.5);
  CHECK(var_discrete(RiskSample::uniform({3, 1, 2}), 0.0) == 1.0);
}

TEST_CASE("CVaR examples") {
  CHECK(cvar_discrete(tenths(), 0.8) == doctest::Approx(1.35).epsilon(1e-12));
  CHECK(cvar_discrete(RiskSample::uniform({3, 1, 2, 6}), 0.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(cvar_discrete(RiskSample::uniform({0.7}), 0.5) == doctest::Approx(1.4).epsilon(1e-15));
}

TEST_CASE("risk measures reject bad input") {
  CHECK_THROWS_AS(var_discrete(RiskSample::uniform({}), 0.5), Error);
  CHECK_THROWS_AS(var_discrete(RiskSample::uniform({1.0}), 1.0), Error);
  CHECK_THROWS_AS(cvar_discrete(RiskSample::uniform({1.0}), -0.1), Error);
  RiskSample bad{{1.0, 2.0}, {0.7, 0.7}};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("non-uniform weights follow the scan oracle") {
  Rng r(31);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + r.below(9);
    RiskSample s;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s.values.push_back(static_cast<double>(r.below(5)));
      s.weights.push_back(r.uniform(0.1, 1.0));
      total += s.weights.back();
    }
    for (double& w : s.weights) w /= total;
    const double alpha = r.uniform(0.0, 0.95);
    CHECK(var_discrete(s, alpha) == oracle::var_scan(s.values, s.weights, alpha));
    CHECK(std::abs(cvar_discrete(s, alpha) - oracle::cvar_scan(s.values, s.weights, alpha)) <= 1e-12);
  }
}

TEST_CASE("Wilcoxon examples") {
  SUBCASE("five positive distinct differences") {
    const std::vector<double> d{0.5, 1.2, 0.3, 2.0, 0.9};
    const auto t = wilcoxon_signed_rank(d);
    CHECK(t.p_value == doctest::Approx(1.0 / 32.0).epsilon(1e-15));
    CHECK(t.statistic == 15.0);
    CHECK(t.exact);
  }
  SUBCASE("symmetric differences sit at the null median") {
    const std::vector<double> d{1, -1, 2, -2, 3, -3, 4, -4, 5, -5};
    const auto t = wilcoxon_signed_rank(d);
    CHECK(t.p_value == doctest::Approx(0.5).epsilon(0.15));
  }
  SUBCASE("strong shift with 100 pairs") {
    Rng r(32);
    std::vector<double> d(100);
    for (auto& x : d) x = 1.0 + r.normal();
    const auto t = wilcoxon_signed_rank(d);
    CHECK_FALSE(t.exact);
    CHECK(t.p_value < 0.01);
  }
  SUBCASE("all zero is degenerate") {
    const std::vector<double> d(30, 0.0);
    try {
      wilcoxon_signed_rank(d);
      FAIL("expected a degenerate error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Degenerate);
    }
  }
}

TEST_CASE("exact Wilcoxon equals sign enumeration, ties included") {
  Rng r(33);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 5 + r.below(10);
    std::vector<double> d(n);
    for (auto& x : d) x = static_cast<double>(static_cast<int>(r.below(9)) - 3);
    std::size_t nonzero = 0;
    for (double x : d) nonzero += x != 0.0;
    if (nonzero < 5) continue;
    CHECK(wilcoxon_signed_rank(d).p_value == doctest::Approx(oracle::wilcoxon_enumerate(d)).epsilon(1e-12));
  }
}

TEST_CASE("normal approximation is close to enumeration at n = 20") {
  Rng r(34);
  std::vector<double> d(21);
  for (auto& x : d) x = 0.3 + r.normal();
  // n = 21 uses the approximation; drop one pair to enumerate 2^20 patterns
  const double approx = wilcoxon_signed_rank(d).p_value;
  d.pop_back();
  const double exact = oracle::wilcoxon_enumerate(d);
  CHECK(std::abs(approx - exact) <= 0.05);
}
