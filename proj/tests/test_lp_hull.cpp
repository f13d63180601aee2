#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mtrd/error.hpp"
#include "mtrd/lp.hpp"
#include "mtrd/regions.hpp"

using namespace mtrd;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool feasible(const lp::Problem& p, const std::vector<double>& x, double tol) {
  for (double v : x)
    if (v < -tol) return false;
  for (const auto& r : p.rows) {
    const double lhs = dot(r.coefficients, x);
    if (r.kind == lp::RowKind::Equal ? std::fabs(lhs - r.rhs) > tol : lhs > r.rhs + tol) return false;
  }
  return true;
}

// Lower-left convex chain of 2-D points (vertices of conv + R^2_+), by
// Pareto filtering and a monotone-chain lower hull.
std::vector<std::size_t> chain_2d(const std::vector<std::array<double, 2>>& pts) {
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pts[a] < pts[b]; });
  std::vector<std::size_t> pareto;
  for (auto i : order)
    if (pareto.empty() || pts[i][1] < pts[pareto.back()][1]) pareto.push_back(i);
  std::vector<std::size_t> hull;
  for (auto i : pareto) {
    while (hull.size() >= 2) {
      const auto& a = pts[hull[hull.size() - 2]];
      const auto& b = pts[hull.back()];
      const auto& c = pts[i];
      const double cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
      if (cross <= 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  std::sort(hull.begin(), hull.end());
  return hull;
}

}  // namespace

TEST_CASE("lp: small closed-form problems") {
  // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
  lp::Problem p{{-1, -1}, {{{1, 2}, lp::RowKind::LessEqual, 4}, {{3, 1}, lp::RowKind::LessEqual, 6}}};
  lp::Solution s = lp::solve(p);
  REQUIRE(s.status == lp::Status::Optimal);
  CHECK(s.objective == doctest::Approx(-2.8));
  CHECK(s.x[0] == doctest::Approx(1.6));
  CHECK(s.x[1] == doctest::Approx(1.2));

  // Equality and a >= row written with negative rhs: x + y = 1, -x <= -0.25
  lp::Problem q{{1, 2}, {{{1, 1}, lp::RowKind::Equal, 1}, {{-1, 0}, lp::RowKind::LessEqual, -0.25}}};
  s = lp::solve(q);
  REQUIRE(s.status == lp::Status::Optimal);
  CHECK(s.objective == doctest::Approx(1.0));

  lp::Problem unbounded{{-1, 0}, {{{0, 1}, lp::RowKind::LessEqual, 1}}};
  CHECK(lp::solve(unbounded).status == lp::Status::Unbounded);

  CHECK_THROWS_AS(lp::solve(lp::Problem{{1, 1}, {{{1}, lp::RowKind::LessEqual, 1}}}), Error);
}

TEST_CASE("lp: infeasible problems carry a Farkas certificate") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int infeasible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    // Mixture LP: sum(l) = 1, sum l_j x_j <= target (componentwise).
    const std::size_t n = 1 + trial % 6;
    const std::size_t d = 2 + trial % 3;
    lp::Problem p;
    p.cost.assign(n, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      lp::Row r{{}, lp::RowKind::LessEqual, u(rng) * 0.8};
      for (std::size_t j = 0; j < n; ++j) r.coefficients.push_back(u(rng));
      p.rows.push_back(r);
    }
    p.rows.push_back({std::vector<double>(n, 1.0), lp::RowKind::Equal, 1.0});
    const lp::Solution s = lp::solve(p);
    if (s.status == lp::Status::Optimal) {
      CHECK(feasible(p, s.x, 1e-9));
      continue;
    }
    REQUIRE(s.status == lp::Status::Infeasible);
    ++infeasible;
    REQUIRE(s.farkas.size() == p.rows.size());
    double yb = 0.0;
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
      yb += s.farkas[i] * p.rows[i].rhs;
      if (p.rows[i].kind == lp::RowKind::LessEqual) CHECK(s.farkas[i] <= 1e-12);
    }
    CHECK(yb > 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < p.rows.size(); ++i) col += s.farkas[i] * p.rows[i].coefficients[j];
      CHECK(col <= 1e-9);
    }
  }
  CHECK(infeasible > 20);
}

TEST_CASE("lp: optimum is no worse than random feasible points") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + trial % 8;
    lp::Problem p;
    for (std::size_t j = 0; j < n; ++j) p.cost.push_back(u(rng));
    std::vector<std::vector<double>> pts(n, std::vector<double>(2));
    for (auto& x : pts)
      for (auto& c : x) c = u(rng);
    for (std::size_t k = 0; k < 2; ++k) {
      lp::Row r{{}, lp::RowKind::LessEqual, 0.5};
      for (std::size_t j = 0; j < n; ++j) r.coefficients.push_back(pts[j][k]);
      p.rows.push_back(r);
    }
    p.rows.push_back({std::vector<double>(n, 1.0), lp::RowKind::Equal, 1.0});
    const lp::Solution s = lp::solve(p);
    if (s.status != lp::Status::Optimal) continue;
    CHECK(feasible(p, s.x, 1e-9));
    for (int k = 0; k < 2000; ++k) {
      std::vector<double> l(n);
      double t = 0.0;
      for (auto& x : l) t += x = -std::log(u(rng) + 1e-300);
      for (auto& x : l) x /= t;
      if (feasible(p, l, 0.0)) CHECK(s.objective <= dot(p.cost, l) + 1e-12);
    }
  }
}

TEST_CASE("hull: two-dimensional points match a monotone-chain oracle") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 40;
    std::vector<OperatingPoint> pts(n);
    std::vector<std::array<double, 2>> flat(n);
    for (std::size_t i = 0; i < n; ++i) {
      pts[i].r1 = flat[i][0] = u(rng);
      pts[i].r2 = flat[i][1] = u(rng);
    }
    CHECK(lower_hull_vertices(pts) == chain_2d(flat));
  }
}

TEST_CASE("hull: four-dimensional points") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 5 + trial * 3;
    std::vector<OperatingPoint> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng), u(rng), u(rng), 1, 0};
    const auto hull = lower_hull_vertices(pts);
    REQUIRE(!hull.empty());
    CHECK(std::is_sorted(hull.begin(), hull.end()));

    // Minimizers of positive directions are vertices.
    for (int k = 0; k < 50; ++k) {
      const double c[4] = {u(rng), u(rng), u(rng), u(rng)};
      std::size_t best = 0;
      double bv = 1e300;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = c[0] * pts[i].r1 + c[1] * pts[i].r2 + c[2] * pts[i].ed1 + c[3] * pts[i].ed2;
        if (v < bv) bv = v, best = i;
      }
      CHECK(std::binary_search(hull.begin(), hull.end(), best));
    }

    // Vertices are not dominated by mixtures of the other points; every
    // other point is dominated by a mixture of vertices.
    auto dominated = [&](std::size_t target, const std::vector<std::size_t>& by) {
      lp::Problem p;
      p.cost.assign(by.size(), 0.0);
      const double t[4] = {pts[target].r1, pts[target].r2, pts[target].ed1, pts[target].ed2};
      for (int k = 0; k < 4; ++k) {
        lp::Row r{{}, lp::RowKind::LessEqual, t[k] + 1e-12};
        for (auto j : by) {
          const double x[4] = {pts[j].r1, pts[j].r2, pts[j].ed1, pts[j].ed2};
          r.coefficients.push_back(x[k]);
        }
        p.rows.push_back(r);
      }
      p.rows.push_back({std::vector<double>(by.size(), 1.0), lp::RowKind::Equal, 1.0});
      return lp::solve(p).status == lp::Status::Optimal;
    };
    for (std::size_t i = 0; i < n; ++i) {
      const bool is_vertex = std::binary_search(hull.begin(), hull.end(), i);
      if (is_vertex) {
        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) others.push_back(j);
        CHECK_FALSE(dominated(i, others));
      } else {
        CHECK(dominated(i, hull));
      }
    }
  }
}

TEST_CASE("hull: duplicates keep one representative") {
  std::vector<OperatingPoint> pts{{1, 0, 0, 0, 1, 0}, {0, 1, 0, 0, 1, 0}, {1, 0, 0, 0, 2, 0}, {1, 1, 0, 0, 1, 0}};
  CHECK(lower_hull_vertices(pts) == std::vector<std::size_t>{0, 1});
  CHECK(lower_hull_vertices({}).empty());
}
