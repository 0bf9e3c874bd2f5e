#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pcvar {

/// Discrete risk values with probabilities (uniform 1/N unless given).
struct RiskSample {
  std::vector<double> values;
  std::vector<double> weights;

  static RiskSample uniform(std::vector<double> values);
  std::size_t size() const noexcept { return values.size(); }
  /// Throws unless non-empty, lengths match, weights >= 0 summing to 1.
  void validate() const;
};

/// Slack used when testing a cumulative probability against alpha, so that
/// e.g. eight atoms of 0.1 reach alpha = 0.8 despite rounding.
inline constexpr double kProbabilityTolerance = 1e-12;

/// min{ r_i : sum_j 1(r_i >= r_j) P(r_j) >= alpha }, ties counted with their
/// full weight.
double var_discrete(const RiskSample& sample, double alpha);

/// (1 / (1 - alpha)) * sum_i 1(r_i >= VaR) P(r_i) r_i, evaluated exactly as
/// written. With no atom splitting at VaR this over-weights the boundary
/// atom and can exceed the largest value when the tail mass exceeds
/// 1 - alpha (values 0.1..1.0 at alpha 0.8 give 1.35).
double cvar_discrete(const RiskSample& sample, double alpha);

enum class Alternative { Greater };

struct TestReport {
  double statistic = 0.0;  // W+, sum of ranks of positive differences
  double p_value = 1.0;
  std::size_t n_pairs = 0;  // after dropping zero differences
  Alternative alternative = Alternative::Greater;
  bool exact = false;
};

/// One-sided paired Wilcoxon signed-rank test of "first member greater".
/// Zero differences are dropped, tied magnitudes get average ranks. The null
/// distribution is exact for n <= 20 and a continuity-corrected normal
/// approximation (with tie correction) above that.
TestReport wilcoxon_signed_rank(std::span<const double> diffs, Alternative alt = Alternative::Greater);

inline constexpr std::size_t kWilcoxonExactMax = 20;

}  // namespace pcvar
