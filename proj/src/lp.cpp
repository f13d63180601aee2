#include "mtrd/lp.hpp"

#include <cmath>
#include <limits>

#include "mtrd/error.hpp"

namespace mtrd::lp {
namespace {

constexpr double kPivotEps = 1e-12;
constexpr double kFeasibilityEps = 1e-9;
constexpr int kBlandAfter = 50;  // consecutive degenerate pivots before switching rules

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), t_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t r, std::size_t c) { return t_[r * (n_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return t_[r * (n_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, n_); }
  // Row m_ holds reduced costs; its rhs holds -objective.
  double& reduced(std::size_t c) { return at(m_, c); }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= n_; ++j) at(r, j) /= p;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) at(i, j) -= f * at(r, j);
    }
  }

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

 private:
  std::size_t m_, n_;
  std::vector<double> t_;
};

// Runs simplex iterations over columns [0, allowed). Returns false if unbounded.
bool iterate(Tableau& tab, std::vector<std::size_t>& basis, std::size_t allowed) {
  int degenerate = 0;
  const std::size_t max_iter = 100 * (tab.rows() + allowed) + 1000;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    const bool bland = degenerate >= kBlandAfter;
    std::size_t enter = allowed;
    double best = -kPivotEps;
    for (std::size_t j = 0; j < allowed; ++j) {
      const double rc = tab.reduced(j);
      if (rc < best) {
        enter = j;
        if (bland) break;
        best = rc;
      }
    }
    if (enter == allowed) return true;

    std::size_t leave = tab.rows();
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tab.rows(); ++i) {
      const double a = tab.at(i, enter);
      if (a <= kPivotEps) continue;
      const double r = tab.rhs(i) / a;
      if (r < ratio - 1e-15 || (r <= ratio + 1e-15 && leave < tab.rows() && basis[i] < basis[leave])) {
        ratio = r;
        leave = i;
      }
    }
    if (leave == tab.rows()) return false;
    degenerate = ratio <= 1e-15 ? degenerate + 1 : 0;
    tab.pivot(leave, enter);
    basis[leave] = enter;
  }
  throw Error("simplex iteration limit reached");
}

}  // namespace

Solution solve(const Problem& problem) {
  const std::size_t n = problem.cost.size();
  const std::size_t m = problem.rows.size();
  for (const Row& r : problem.rows) {
    if (r.coefficients.size() != n) throw Error("lp: row length does not match cost length");
  }

  // Columns: [structural | slack/surplus per inequality | artificial per row].
  std::size_t n_slack = 0;
  for (const Row& r : problem.rows) n_slack += r.kind == RowKind::LessEqual ? 1 : 0;
  const std::size_t art0 = n + n_slack;
  Tableau tab(m, art0 + m);
  std::vector<std::size_t> basis(m);
  std::vector<bool> needs_artificial(m, false);

  std::size_t slack = n;
  for (std::size_t i = 0; i < m; ++i) {
    const Row& r = problem.rows[i];
    const double sign = r.rhs < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign * r.coefficients[j];
    tab.rhs(i) = sign * r.rhs;
    if (r.kind == RowKind::LessEqual) {
      tab.at(i, slack) = sign;
      if (sign > 0.0) {
        basis[i] = slack;
      } else {
        needs_artificial[i] = true;
      }
      ++slack;
    } else {
      needs_artificial[i] = true;
    }
    if (needs_artificial[i]) {
      tab.at(i, art0 + i) = 1.0;
      basis[i] = art0 + i;
    }
  }

  // Phase I: minimize the sum of artificials.
  for (std::size_t i = 0; i < m; ++i) {
    if (!needs_artificial[i]) continue;
    for (std::size_t j = 0; j <= art0 + m; ++j) {
      if (j >= art0 && j < art0 + m) continue;
      tab.at(m, j) -= tab.at(i, j);
    }
  }
  iterate(tab, basis, art0 + m);
  Solution sol;
  if (-tab.rhs(m) > kFeasibilityEps) {
    sol.status = Status::Infeasible;
    sol.farkas.assign(m, 0.0);
    std::size_t s = n;
    for (std::size_t i = 0; i < m; ++i) {
      const Row& r = problem.rows[i];
      const double sign = r.rhs < 0.0 ? -1.0 : 1.0;
      double y;  // multiplier of the sign-normalized row
      if (r.kind == RowKind::LessEqual) {
        y = -tab.reduced(s) * sign;
        ++s;
      } else {
        y = 1.0 - tab.reduced(art0 + i);
      }
      sol.farkas[i] = sign * y;
    }
    return sol;
  }
  // Drive zero-level artificials out of the basis where possible.
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < art0) continue;
    for (std::size_t j = 0; j < art0; ++j) {
      if (std::fabs(tab.at(i, j)) > kPivotEps) {
        tab.pivot(i, j);
        basis[i] = j;
        break;
      }
    }
  }

  // Phase II: reduced costs for the original objective.
  for (std::size_t j = 0; j <= art0 + m; ++j) tab.at(m, j) = 0.0;
  for (std::size_t j = 0; j < n; ++j) tab.at(m, j) = problem.cost[j];
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t b = basis[i];
    const double cb = b < n ? problem.cost[b] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= art0 + m; ++j) tab.at(m, j) -= cb * tab.at(i, j);
  }
  if (!iterate(tab, basis, art0)) {
    sol.status = Status::Unbounded;
    return sol;
  }

  sol.status = Status::Optimal;
  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) sol.x[basis[i]] = tab.rhs(i);
  }
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += problem.cost[j] * sol.x[j];
  return sol;
}

}  // namespace mtrd::lp
