#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pointcvar/riskmeasure.hpp"
#include "pointcvar/simplex.hpp"

namespace pcvar {

/// Relaxed CVaR retention problem over variables (zeta, w_1..w_N, z_1..z_N):
///
///   minimise   zeta + 1/(1-alpha) * sum_i P_i z_i
///   subject to sum_i w_i >= N_r,  0 <= w_i <= 1,
///              z_i >= w_i r_i - zeta,  z_i >= 0,  zeta free.
struct LPProblem {
  RiskSample risks;
  double alpha = 0.0;
  std::size_t n_retain = 0;
  LinearProgram program;

  std::size_t n_points() const noexcept { return risks.size(); }
  static constexpr std::size_t zeta_index() { return 0; }
  std::size_t w_index(std::size_t i) const { return 1 + i; }
  std::size_t z_index(std::size_t i) const { return 1 + n_points() + i; }
};

LPProblem build_lp(const RiskSample& risks, double alpha, std::size_t n_retain);

struct LPSolution {
  LpStatus status = LpStatus::Infeasible;
  double zeta = 0.0;
  std::vector<double> w;
  std::vector<double> z;
  double objective = 0.0;
};

/// Exact simplex solve. The result is checked for feasibility (1e-9) and its
/// objective against the sorted-retention mask, which is a feasible point.
LPSolution solve_lp_exact(const LPProblem& problem);

struct RetentionMask {
  std::vector<bool> keep;
  std::size_t n_kept = 0;

  /// Kept indices in increasing order.
  std::vector<std::size_t> indices() const;
};

RetentionMask make_mask(std::size_t n, std::span<const std::size_t> kept);

/// Weights that differ by no more than this count as tied when binarising.
inline constexpr double kWeightTieTolerance = 1e-9;

/// Keeps the n_retain largest weights; ties go to the lower index.
RetentionMask binarize_solution(const LPSolution& sol, std::size_t n_retain);

/// ceil(delta * n), snapping products within 1e-9 of an integer.
std::size_t retention_count(double delta, std::size_t n);

struct SelectStats {
  std::size_t comparisons = 0;
};

/// Keeps the ceil(delta * N) lowest risks, ties to the lower index, using
/// linear-time selection (nth_element) rather than a full sort.
RetentionMask sort_select(std::span<const double> risks, double delta, SelectStats* stats = nullptr);
RetentionMask sort_select(const RiskSample& risks, double delta, SelectStats* stats = nullptr);

/// Relaxed objective at fixed weights, minimised over zeta (the minimum sits
/// at one of the products w_i r_i).
double retention_objective(const RiskSample& risks, double alpha, std::span<const double> w);
double retention_objective(const RiskSample& risks, double alpha, const RetentionMask& mask);

/// CPLEX-style LP text of the problem, for cross-checking with external
/// solvers.
std::string format_lp(const LPProblem& problem);

}  // namespace pcvar
