#include "pointcvar/simplex.hpp"

#include <algorithm>
#include <cmath>

#include "pointcvar/error.hpp"

namespace pcvar {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

double max_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < lp.n_vars(); ++j) {
    worst = std::max(worst, lp.lower[j] - x[j]);
    worst = std::max(worst, x[j] - lp.upper[j]);
  }
  for (const auto& row : lp.rows) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < lp.n_vars(); ++j) lhs += row.coeffs[j] * x[j];
    switch (row.sense) {
      case Sense::LessEq: worst = std::max(worst, lhs - row.rhs); break;
      case Sense::GreaterEq: worst = std::max(worst, row.rhs - lhs); break;
      case Sense::Equal: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

namespace {

// Original variable j = offset + sum(sign * y[col]) over its standard columns.
struct VarMap {
  double offset = 0.0;
  std::vector<std::pair<std::size_t, double>> cols;
};

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : m_(rows), n_(cols), a_(rows * (cols + 1), 0.0), obj_(cols + 1, 0.0), basis_(rows, 0) {}

  double& at(std::size_t i, std::size_t j) { return a_[i * (n_ + 1) + j]; }
  double& rhs(std::size_t i) { return a_[i * (n_ + 1) + n_]; }
  std::vector<double>& obj() { return obj_; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= n_; ++j) at(r, j) /= p;
    at(r, c) = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
    const double f = obj_[c];
    if (f != 0.0) {
      for (std::size_t j = 0; j <= n_; ++j) obj_[j] -= f * at(r, j);
      obj_[c] = 0.0;
    }
    basis_[r] = c;
  }

  void drop_row(std::size_t r) {
    a_.erase(a_.begin() + static_cast<std::ptrdiff_t>(r * (n_ + 1)),
             a_.begin() + static_cast<std::ptrdiff_t>((r + 1) * (n_ + 1)));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    --m_;
  }

  // Bland's rule iterations. Returns false when unbounded.
  bool run(const std::vector<bool>& enterable, std::size_t& iterations) {
    constexpr std::size_t kMaxIterations = 1'000'000;
    while (true) {
      std::size_t enter = n_;
      for (std::size_t j = 0; j < n_; ++j) {
        if (enterable[j] && obj_[j] < -kSimplexTolerance) {
          enter = j;
          break;
        }
      }
      if (enter == n_) return true;
      std::size_t leave = m_;
      double best = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double aij = at(i, enter);
        if (aij <= kSimplexTolerance) continue;
        const double ratio = rhs(i) / aij;
        if (leave == m_ || ratio < best - kSimplexTolerance) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + kSimplexTolerance && basis_[i] < basis_[leave]) {
          leave = i;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
      if (++iterations > kMaxIterations) fail(ErrorCode::Solver, "simplex: iteration limit exceeded");
    }
  }

 private:
  std::size_t m_, n_;
  std::vector<double> a_;
  std::vector<double> obj_;
  std::vector<std::size_t> basis_;
};

}  // namespace

SimplexResult solve_simplex(const LinearProgram& lp) {
  const std::size_t nv = lp.n_vars();
  require(lp.lower.size() == nv && lp.upper.size() == nv, "simplex: bound vectors have wrong length");
  for (const auto& row : lp.rows) require(row.coeffs.size() == nv, "simplex: row has wrong length");

  // Standard form: every column y >= 0.
  std::vector<VarMap> vars(nv);
  std::size_t ny = 0;
  struct BoundRow {
    std::size_t col;
    double limit;
  };
  std::vector<BoundRow> bound_rows;
  for (std::size_t j = 0; j < nv; ++j) {
    const double lo = lp.lower[j];
    const double hi = lp.upper[j];
    require(!(lo > hi), "simplex: lower bound above upper bound");
    if (std::isfinite(lo)) {
      vars[j].offset = lo;
      vars[j].cols.push_back({ny, 1.0});
      if (std::isfinite(hi)) bound_rows.push_back({ny, hi - lo});
      ++ny;
    } else if (std::isfinite(hi)) {
      vars[j].offset = hi;
      vars[j].cols.push_back({ny++, -1.0});
    } else {
      vars[j].cols.push_back({ny++, 1.0});
      vars[j].cols.push_back({ny++, -1.0});
    }
  }

  struct StdRow {
    std::vector<double> a;
    Sense sense;
    double b;
  };
  std::vector<StdRow> rows;
  for (const auto& row : lp.rows) {
    StdRow r{std::vector<double>(ny, 0.0), row.sense, row.rhs};
    for (std::size_t j = 0; j < nv; ++j) {
      const double c = row.coeffs[j];
      if (c == 0.0) continue;
      r.b -= c * vars[j].offset;
      for (auto [col, sign] : vars[j].cols) r.a[col] += c * sign;
    }
    rows.push_back(std::move(r));
  }
  for (const auto& br : bound_rows) {
    StdRow r{std::vector<double>(ny, 0.0), Sense::LessEq, br.limit};
    r.a[br.col] = 1.0;
    rows.push_back(std::move(r));
  }
  for (auto& r : rows) {
    if (r.b < 0.0) {
      for (double& v : r.a) v = -v;
      r.b = -r.b;
      if (r.sense == Sense::LessEq) r.sense = Sense::GreaterEq;
      else if (r.sense == Sense::GreaterEq) r.sense = Sense::LessEq;
    }
  }

  // Column layout: structural, then slack/surplus, then artificial.
  const std::size_t m = rows.size();
  std::size_t n_slack = 0, n_art = 0;
  for (const auto& r : rows) {
    if (r.sense != Sense::Equal) ++n_slack;
    if (r.sense != Sense::LessEq) ++n_art;
  }
  const std::size_t ncols = ny + n_slack + n_art;
  const std::size_t first_art = ny + n_slack;
  Tableau t(m, ncols);
  std::size_t s = ny, a = first_art;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < ny; ++j) t.at(i, j) = rows[i].a[j];
    t.rhs(i) = rows[i].b;
    switch (rows[i].sense) {
      case Sense::LessEq:
        t.at(i, s) = 1.0;
        t.basis()[i] = s++;
        break;
      case Sense::GreaterEq:
        t.at(i, s++) = -1.0;
        t.at(i, a) = 1.0;
        t.basis()[i] = a++;
        break;
      case Sense::Equal:
        t.at(i, a) = 1.0;
        t.basis()[i] = a++;
        break;
    }
  }

  SimplexResult result;
  std::vector<bool> enterable(ncols, true);

  // Phase 1: minimise the sum of artificials.
  if (n_art > 0) {
    auto& obj = t.obj();
    std::fill(obj.begin(), obj.end(), 0.0);
    for (std::size_t j = first_art; j < ncols; ++j) obj[j] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis()[i] >= first_art) {
        for (std::size_t j = 0; j <= ncols; ++j) obj[j] -= t.at(i, j);
      }
    }
    t.run(enterable, result.iterations);
    double scale = 1.0;
    for (const auto& r : rows) scale = std::max(scale, std::abs(r.b));
    if (-t.obj()[ncols] > kSimplexTolerance * scale) {
      result.status = LpStatus::Infeasible;
      return result;
    }
    for (std::size_t i = 0; i < t.rows();) {
      if (t.basis()[i] < first_art) {
        ++i;
        continue;
      }
      std::size_t col = ncols;
      for (std::size_t j = 0; j < first_art; ++j) {
        if (std::abs(t.at(i, j)) > kSimplexTolerance) {
          col = j;
          break;
        }
      }
      if (col == ncols) {
        t.drop_row(i);  // redundant constraint
      } else {
        t.pivot(i, col);
        ++i;
      }
    }
    for (std::size_t j = first_art; j < ncols; ++j) enterable[j] = false;
  }

  // Phase 2 objective in terms of the standard columns.
  std::vector<double> c(ncols + 1, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    for (auto [col, sign] : vars[j].cols) c[col] += lp.cost[j] * sign;
  }
  auto& obj = t.obj();
  obj = c;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const double cb = obj[t.basis()[i]];
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= ncols; ++j) obj[j] -= cb * t.at(i, j);
  }
  if (!t.run(enterable, result.iterations)) {
    result.status = LpStatus::Unbounded;
    return result;
  }

  std::vector<double> y(ncols, 0.0);
  for (std::size_t i = 0; i < t.rows(); ++i) y[t.basis()[i]] = std::max(0.0, t.rhs(i));
  result.x.assign(nv, 0.0);
  result.objective = 0.0;
  for (std::size_t j = 0; j < nv; ++j) {
    double v = vars[j].offset;
    for (auto [col, sign] : vars[j].cols) v += sign * y[col];
    result.x[j] = v;
    result.objective += lp.cost[j] * v;
  }
  result.status = LpStatus::Optimal;
  return result;
}

}  // namespace pcvar
