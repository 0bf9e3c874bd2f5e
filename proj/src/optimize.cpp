#include "pointcvar/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "pointcvar/error.hpp"

namespace pcvar {

LPProblem build_lp(const RiskSample& risks, double alpha, std::size_t n_retain) {
  risks.validate();
  require(alpha >= 0.0 && alpha < 1.0, "build_lp: alpha must lie in [0, 1)");
  const std::size_t n = risks.size();
  require(n_retain >= 1, "build_lp: n_retain must be >= 1");
  require(n_retain <= n, "build_lp: n_retain (" + std::to_string(n_retain) + ") exceeds N (" +
                             std::to_string(n) + ")");
  LPProblem p{risks, alpha, n_retain, LinearProgram(1 + 2 * n)};
  auto& lp = p.program;
  const double tail = 1.0 / (1.0 - alpha);
  lp.cost[0] = 1.0;
  lp.lower[0] = -kInf;
  for (std::size_t i = 0; i < n; ++i) {
    lp.upper[p.w_index(i)] = 1.0;
    lp.cost[p.z_index(i)] = tail * risks.weights[i];
  }
  LinearProgram::Row retain{std::vector<double>(lp.n_vars(), 0.0), Sense::GreaterEq,
                            static_cast<double>(n_retain)};
  for (std::size_t i = 0; i < n; ++i) retain.coeffs[p.w_index(i)] = 1.0;
  lp.rows.push_back(std::move(retain));
  for (std::size_t i = 0; i < n; ++i) {
    // z_i - r_i w_i + zeta >= 0
    LinearProgram::Row couple{std::vector<double>(lp.n_vars(), 0.0), Sense::GreaterEq, 0.0};
    couple.coeffs[p.z_index(i)] = 1.0;
    couple.coeffs[p.w_index(i)] = -risks.values[i];
    couple.coeffs[0] = 1.0;
    lp.rows.push_back(std::move(couple));
  }
  return p;
}

double retention_objective(const RiskSample& risks, double alpha, std::span<const double> w) {
  require(w.size() == risks.size(), "retention_objective: weight count mismatch");
  const double tail = 1.0 / (1.0 - alpha);
  std::vector<double> prod(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) prod[i] = w[i] * risks.values[i];
  double best = kInf;
  for (double zeta : prod) {
    double v = zeta;
    for (std::size_t i = 0; i < w.size(); ++i) v += tail * risks.weights[i] * std::max(0.0, prod[i] - zeta);
    best = std::min(best, v);
  }
  return best;
}

double retention_objective(const RiskSample& risks, double alpha, const RetentionMask& mask) {
  std::vector<double> w(mask.keep.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = mask.keep[i] ? 1.0 : 0.0;
  return retention_objective(risks, alpha, w);
}

LPSolution solve_lp_exact(const LPProblem& problem) {
  const auto res = solve_simplex(problem.program);
  if (res.status != LpStatus::Optimal) {
    // Unreachable for a well-formed problem: w = 1, z = r, zeta = 0 is
    // feasible and the objective is bounded below by min(r) >= 0.
    fail(ErrorCode::Solver, std::string("solve_lp_exact: simplex returned ") + to_string(res.status));
  }
  const std::size_t n = problem.n_points();
  LPSolution sol;
  sol.status = res.status;
  sol.zeta = res.x[0];
  sol.w.resize(n);
  sol.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sol.w[i] = res.x[problem.w_index(i)];
    sol.z[i] = res.x[problem.z_index(i)];
  }
  sol.objective = res.objective;

  const double viol = max_violation(problem.program, res.x);
  if (viol > kSimplexTolerance * std::max(1.0, static_cast<double>(n))) {
    fail(ErrorCode::Solver, "solve_lp_exact: solution violates constraints by " + std::to_string(viol));
  }
  const auto mask = sort_select(problem.risks.values,
                                static_cast<double>(problem.n_retain) / static_cast<double>(n));
  const double upper = retention_objective(problem.risks, problem.alpha, mask);
  if (sol.objective > upper + kSimplexTolerance) {
    fail(ErrorCode::Solver, "solve_lp_exact: objective above a known feasible point");
  }
  return sol;
}

std::vector<std::size_t> RetentionMask::indices() const {
  std::vector<std::size_t> out;
  out.reserve(n_kept);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.push_back(i);
  }
  return out;
}

RetentionMask make_mask(std::size_t n, std::span<const std::size_t> kept) {
  RetentionMask m;
  m.keep.assign(n, false);
  for (std::size_t i : kept) {
    require(i < n, "make_mask: index out of range");
    if (!m.keep[i]) ++m.n_kept;
    m.keep[i] = true;
  }
  return m;
}

RetentionMask binarize_solution(const LPSolution& sol, std::size_t n_retain) {
  require(sol.status == LpStatus::Optimal, "binarize_solution: solution is not optimal");
  const std::size_t n = sol.w.size();
  require(n_retain <= n, "binarize_solution: n_retain exceeds N");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sol.w[a] > sol.w[b] + kWeightTieTolerance;
  });
  order.resize(n_retain);
  return make_mask(n, order);
}

std::size_t retention_count(double delta, std::size_t n) {
  require(delta > 0.0 && delta <= 1.0, "retention rate delta must lie in (0, 1]");
  const double prod = delta * static_cast<double>(n);
  const double nearest = std::round(prod);
  if (std::abs(prod - nearest) <= 1e-9 * std::max(1.0, prod)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(prod));
}

RetentionMask sort_select(std::span<const double> risks, double delta, SelectStats* stats) {
  const std::size_t n = risks.size();
  require(n >= 1, "sort_select: empty risk vector");
  const std::size_t keep = retention_count(delta, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::size_t comparisons = 0;
  if (keep < n) {
    auto by_risk = [&](std::size_t a, std::size_t b) {
      ++comparisons;
      return risks[a] < risks[b] || (risks[a] == risks[b] && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), by_risk);
  }
  if (stats) stats->comparisons = comparisons;
  RetentionMask m;
  m.keep.assign(n, false);
  for (std::size_t k = 0; k < keep; ++k) m.keep[idx[k]] = true;
  m.n_kept = keep;
  return m;
}

RetentionMask sort_select(const RiskSample& risks, double delta, SelectStats* stats) {
  return sort_select(std::span<const double>(risks.values), delta, stats);
}

std::string format_lp(const LPProblem& p) {
  const std::size_t n = p.n_points();
  const double tail = 1.0 / (1.0 - p.alpha);
  std::string out = "\\ CVaR retention LP: N = " + std::to_string(n) + ", N_r = " + std::to_string(p.n_retain) + "\n";
  char buf[160];
  out += "Minimize\n obj: zeta";
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, " + %.17g z%zu", tail * p.risks.weights[i], i + 1);
    out += buf;
  }
  out += "\nSubject To\n retain:";
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%s w%zu", i == 0 ? "" : " +", i + 1);
    out += buf;
  }
  out += " >= " + std::to_string(p.n_retain) + "\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, " c%zu: z%zu - %.17g w%zu + zeta >= 0\n", i + 1, i + 1, p.risks.values[i], i + 1);
    out += buf;
  }
  out += "Bounds\n zeta free\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, " 0 <= w%zu <= 1\n", i + 1);
    out += buf;
  }
  out += "End\n";
  return out;
}

}  // namespace pcvar
