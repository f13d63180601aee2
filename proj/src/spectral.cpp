#include "mtrd/spectral.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "mtrd/error.hpp"

namespace mtrd {
namespace {

Eigen::MatrixXd as_matrix(const ProbTensor& t, const AxisList& rows, const AxisList& cols) {
  AxisList order = rows;
  order.insert(order.end(), cols.begin(), cols.end());
  const ProbTensor m = marginal(t, order);
  std::size_t r = 1;
  for (std::size_t i = 0; i < rows.size(); ++i) r *= m.sizes()[i];
  const std::size_t c = m.size() / r;
  // Row-major storage maps onto a row-major Eigen view.
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(m.values().data(), static_cast<Eigen::Index>(r),
                                    static_cast<Eigen::Index>(c));
}

}  // namespace

std::size_t Spectrum::numerical_rank(double threshold) const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](double s) { return s > threshold; }));
}

TildeMatrix tilde(const Eigen::MatrixXd& joint) {
  const Eigen::VectorXd row_mass = joint.rowwise().sum();
  const Eigen::VectorXd col_mass = joint.colwise().sum().transpose();
  TildeMatrix out;
  for (Eigen::Index i = 0; i < row_mass.size(); ++i) {
    if (row_mass(i) > 0.0) out.row_support.push_back(static_cast<std::size_t>(i));
  }
  for (Eigen::Index j = 0; j < col_mass.size(); ++j) {
    if (col_mass(j) > 0.0) out.col_support.push_back(static_cast<std::size_t>(j));
  }
  if (out.row_support.empty() || out.col_support.empty()) throw Error("tilde: empty support");

  const auto nr = static_cast<Eigen::Index>(out.row_support.size());
  const auto nc = static_cast<Eigen::Index>(out.col_support.size());
  out.values.resize(nr, nc);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const auto r = static_cast<Eigen::Index>(out.row_support[static_cast<std::size_t>(i)]);
    const double sr = std::sqrt(row_mass(r));
    for (Eigen::Index j = 0; j < nc; ++j) {
      const auto c = static_cast<Eigen::Index>(out.col_support[static_cast<std::size_t>(j)]);
      out.values(i, j) = joint(r, c) / (sr * std::sqrt(col_mass(c)));
    }
  }
  return out;
}

TildeMatrix tilde(const ProbTensor& joint) {
  if (joint.rank() != 2) throw Error("tilde: expected a two-axis joint");
  return tilde(joint, {joint.axes()[0]}, {joint.axes()[1]});
}

TildeMatrix tilde(const ProbTensor& t, const AxisList& rows, const AxisList& cols) {
  if (rows.empty() || cols.empty()) throw Error("tilde: row and column axis groups must be nonempty");
  return tilde(as_matrix(t, rows, cols));
}

Spectrum singular_spectrum(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw Error("singular_spectrum: non-finite entries");
  Spectrum s;
  if (m.size() == 0) return s;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();  // already descending
  s.values.resize(static_cast<std::size_t>(sv.size()));
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double x = sv(i);
    if (!std::isfinite(x)) throw Error("singular_spectrum: decomposition failed");
    s.values[static_cast<std::size_t>(i)] = x < kSpectrumClamp ? 0.0 : x;
  }
  return s;
}

DpiReport dpi_check(const ProbTensor& xyz, double tolerance) {
  if (xyz.rank() != 3) throw Error("dpi_check: expected a three-axis joint (X, Y, Z)");
  const auto& ax = xyz.axes();
  const Spectrum xz = singular_spectrum(tilde(xyz, {ax[0]}, {ax[2]}));
  const Spectrum xy = singular_spectrum(tilde(xyz, {ax[0]}, {ax[1]}));
  const Spectrum yz = singular_spectrum(tilde(xyz, {ax[1]}, {ax[2]}));

  DpiReport report;
  report.tolerance = tolerance;
  report.rank_xz = xz.numerical_rank(kSpectralTolerance);
  report.lambda2_yz = yz.lambda(2);
  bool first = true;
  for (std::size_t i = 2; i <= report.rank_xz; ++i) {
    DpiTerm term;
    term.index = i;
    term.lambda_xz = xz.lambda(i);
    term.lambda_xy = xy.lambda(i);
    term.lambda2_yz = report.lambda2_yz;
    term.slack_product = term.lambda_xy * term.lambda2_yz - term.lambda_xz;
    term.slack_chain = term.lambda_xy - term.lambda_xy * term.lambda2_yz;
    const double worst = std::min(term.slack_product, term.slack_chain);
    report.worst_slack = first ? worst : std::min(report.worst_slack, worst);
    first = false;
    report.terms.push_back(term);
  }
  report.holds = report.worst_slack >= -tolerance;
  return report;
}

TildeMatrix kronecker_tilde(const ProbTensor& pair, int k, std::size_t entry_cap) {
  if (pair.rank() != 2) throw Error("kronecker_tilde: expected a two-axis joint");
  const ProbTensor ext = iid_extend(pair, k, entry_cap);
  const auto un = static_cast<std::size_t>(k);
  AxisList rows(ext.axes().begin(), ext.axes().begin() + static_cast<std::ptrdiff_t>(un));
  AxisList cols(ext.axes().begin() + static_cast<std::ptrdiff_t>(un), ext.axes().end());
  return tilde(ext, rows, cols);
}

double maximal_correlation(const Eigen::MatrixXd& joint) {
  const TildeMatrix t = tilde(joint);
  if (t.row_support.size() < 2 || t.col_support.size() < 2) return 0.0;
  return std::clamp(singular_spectrum(t).lambda(2), 0.0, 1.0);
}

double maximal_correlation(const ProbTensor& joint) {
  if (joint.rank() != 2) throw Error("maximal_correlation: expected a two-axis joint");
  return maximal_correlation(as_matrix(joint, {joint.axes()[0]}, {joint.axes()[1]}));
}

}  // namespace mtrd
