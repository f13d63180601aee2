#pragma once

// Normalized joint matrices P_X^{-1/2} P_XY P_Y^{-1/2}, their singular spectra,
// and the spectral data-processing check for Markov triples.

#include <Eigen/Core>

#include <cstddef>
#include <vector>

#include "mtrd/probkit.hpp"

namespace mtrd {

inline constexpr double kSpectralTolerance = 1e-9;
inline constexpr double kSpectrumClamp = 1e-12;

// Normalized joint restricted to the support of both marginals.
// row_support[i] is the original symbol index of row i (likewise columns).
struct TildeMatrix {
  Eigen::MatrixXd values;
  std::vector<std::size_t> row_support;
  std::vector<std::size_t> col_support;
};

struct Spectrum {
  std::vector<double> values;  // descending, entries below kSpectrumClamp set to 0

  // 1-based; indices past the end read as 0.
  double lambda(std::size_t i) const { return i >= 1 && i <= values.size() ? values[i - 1] : 0.0; }
  std::size_t numerical_rank(double threshold = kSpectralTolerance) const;
};

// The matrix need not be normalized: the construction is invariant to
// scaling, so unnormalized conditional slices may be passed directly.
// Throws mtrd::Error when every entry is zero.
TildeMatrix tilde(const Eigen::MatrixXd& joint);
// Two-axis tensor; rows follow the first axis.
TildeMatrix tilde(const ProbTensor& joint);
// Groups `rows` and `cols` axes (row-major within each group) into a matrix.
TildeMatrix tilde(const ProbTensor& t, const AxisList& rows, const AxisList& cols);

Spectrum singular_spectrum(const Eigen::MatrixXd& m);
inline Spectrum singular_spectrum(const TildeMatrix& t) { return singular_spectrum(t.values); }

struct DpiTerm {
  std::size_t index = 0;  // i >= 2
  double lambda_xz = 0.0;
  double lambda_xy = 0.0;
  double lambda2_yz = 0.0;
  double slack_product = 0.0;  // lambda_xy * lambda2_yz - lambda_xz
  double slack_chain = 0.0;    // lambda_xy - lambda_xy * lambda2_yz
};

struct DpiReport {
  std::vector<DpiTerm> terms;
  std::size_t rank_xz = 0;
  double lambda2_yz = 0.0;
  double tolerance = kSpectralTolerance;
  double worst_slack = 0.0;  // min over all slacks; 0 when there are no terms
  // True iff every slack >= -tolerance. False certifies X -> Y -> Z is not Markov.
  bool holds = true;
};

// Axes of `xyz` are read in order as (X, Y, Z).
DpiReport dpi_check(const ProbTensor& xyz, double tolerance = kSpectralTolerance);

// tilde(iid_extend(pair, k)), rows indexed by x^k and columns by y^k.
TildeMatrix kronecker_tilde(const ProbTensor& pair, int k, std::size_t entry_cap = kDefaultEntryCap);

// Second singular value of the normalized joint, in [0, 1]; 0 when either
// marginal has a single supported symbol.
double maximal_correlation(const Eigen::MatrixXd& joint);
double maximal_correlation(const ProbTensor& joint);

}  // namespace mtrd
