#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace pcvar {

enum class Sense { LessEq, GreaterEq, Equal };

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize cost . x  subject to  rows, lower <= x <= upper.
/// Bounds may be infinite (a free variable has lower = -inf, upper = +inf).
struct LinearProgram {
  struct Row {
    std::vector<double> coeffs;  // dense, length n_vars
    Sense sense = Sense::LessEq;
    double rhs = 0.0;
  };

  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> rows;

  explicit LinearProgram(std::size_t n_vars = 0)
      : cost(n_vars, 0.0), lower(n_vars, 0.0), upper(n_vars, kInf) {}

  std::size_t n_vars() const noexcept { return cost.size(); }
};

struct SimplexResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t iterations = 0;
};

inline constexpr double kSimplexTolerance = 1e-9;

/// Two-phase dense tableau simplex with Bland's lowest-index rule for both
/// the entering and the leaving variable, so it never cycles. Deterministic.
SimplexResult solve_simplex(const LinearProgram& lp);

/// Largest violation of any row or bound by x.
double max_violation(const LinearProgram& lp, const std::vector<double>& x);

}  // namespace pcvar
