#include "pointcvar/riskmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pointcvar/error.hpp"

namespace pcvar {

RiskSample RiskSample::uniform(std::vector<double> values) {
  RiskSample s;
  const std::size_t n = values.size();
  s.values = std::move(values);
  s.weights.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  return s;
}

void RiskSample::validate() const {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "risk sample is empty");
  require(weights.size() == values.size(), "risk sample: weights and values differ in length");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0, "risk sample: negative weight");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-9, "risk sample: weights do not sum to 1");
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "risk sample: non-finite value");
  }
}

namespace {

void check_alpha(double alpha) {
  require(alpha >= 0.0 && alpha < 1.0, "risk level alpha must lie in [0, 1)");
}

}  // namespace

double var_discrete(const RiskSample& sample, double alpha) {
  sample.validate();
  check_alpha(alpha);
  const std::size_t n = sample.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return sample.values[a] < sample.values[b]; });
  // Walk groups of equal value; a group's cumulative probability includes
  // every atom at or below it.
  double cum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    const double v = sample.values[order[i]];
    std::size_t j = i;
    while (j < n && sample.values[order[j]] == v) cum += sample.weights[order[j++]];
    if (cum + kProbabilityTolerance >= alpha) return v;
    i = j;
  }
  return sample.values[order.back()];
}

double cvar_discrete(const RiskSample& sample, double alpha) {
  const double var = var_discrete(sample, alpha);
  double tail = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample.values[i] >= var) tail += sample.weights[i] * sample.values[i];
  }
  return tail / (1.0 - alpha);
}

TestReport wilcoxon_signed_rank(std::span<const double> diffs, Alternative alt) {
  std::vector<double> d;
  for (double x : diffs) {
    if (!std::isfinite(x)) fail(ErrorCode::NonFinite, "wilcoxon: non-finite difference");
    if (x != 0.0) d.push_back(x);
  }
  if (d.empty()) fail(ErrorCode::Degenerate, "wilcoxon: all differences are zero");
  const std::size_t n = d.size();
  if (n < 5) {
    fail(ErrorCode::Degenerate, "wilcoxon: need at least 5 non-zero differences, got " + std::to_string(n));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });

  // Ranks are kept doubled so average ranks stay integral.
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const long avg2 = static_cast<long>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t m = i; m < j; ++m) rank2[order[m]] = avg2;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  long w2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0.0) w2 += rank2[i];
  }

  TestReport r;
  r.alternative = alt;
  r.n_pairs = n;
  r.statistic = static_cast<double>(w2) / 2.0;

  if (n <= kWilcoxonExactMax) {
    // Distribution of the doubled positive-rank sum over all 2^n sign
    // assignments, by subset-sum counting.
    const long total2 = std::accumulate(rank2.begin(), rank2.end(), 0L);
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    long reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long s = reach; s >= 0; --s) {
        if (count[static_cast<std::size_t>(s)] != 0.0) {
          count[static_cast<std::size_t>(s + rank2[i])] += count[static_cast<std::size_t>(s)];
        }
      }
      reach += rank2[i];
    }
    double upper = 0.0;
    for (long s = w2; s <= total2; ++s) upper += count[static_cast<std::size_t>(s)];
    r.p_value = upper / std::ldexp(1.0, static_cast<int>(n));
    r.exact = true;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) fail(ErrorCode::Degenerate, "wilcoxon: zero variance under the null");
    const double z = (r.statistic - mean - 0.5) / std::sqrt(var);
    r.p_value = 0.5 * std::erfc(z / std::sqrt(2.0));
  }
  r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  return r;
}

}  // namespace pcvar
