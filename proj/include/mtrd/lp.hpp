#pragma once

// Dense two-phase simplex for the small linear programs that arise when
// mixing operating points (a handful of rows, up to a few thousand columns).

#include <cstddef>
#include <vector>

namespace mtrd::lp {

enum class RowKind { LessEqual, Equal };

struct Row {
  std::vector<double> coefficients;  // one per column
  RowKind kind = RowKind::LessEqual;
  double rhs = 0.0;
};

// minimize cost . x  subject to rows, x >= 0
struct Problem {
  std::vector<double> cost;
  std::vector<Row> rows;
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  // When infeasible: row multipliers y with y . rhs > 0, y^T A <= 0 column-wise
  // and y_i <= 0 on LessEqual rows (a Farkas certificate).
  std::vector<double> farkas;
};

Solution solve(const Problem& problem);

}  // namespace mtrd::lp
