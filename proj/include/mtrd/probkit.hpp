#pragma once

// Finite-alphabet probability calculus: named-axis tensors, marginals,
// conditionals, i.i.d. extensions and information measures in bits.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtrd {

class AuxChannel;

using AxisList = std::vector<std::string>;

inline constexpr double kConstructionTolerance = 1e-12;
inline constexpr double kArithmeticTolerance = 1e-10;
inline constexpr double kInfoFloor = 1e-10;
inline constexpr std::size_t kDefaultEntryCap = std::size_t{1} << 22;

// Dense row-major joint distribution; the last axis varies fastest.
// Immutable after construction.
class ProbTensor {
 public:
  // Throws mtrd::Error on duplicate labels, size mismatch, negative or
  // non-finite entries, or a total further than `tolerance` from 1.
  ProbTensor(AxisList axes, std::vector<std::size_t> sizes, std::vector<double> values,
             double tolerance = kConstructionTolerance);

  const AxisList& axes() const { return axes_; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::span<const double> values() const { return values_; }
  std::size_t rank() const { return axes_.size(); }
  std::size_t size() const { return values_.size(); }

  bool has_axis(std::string_view label) const;
  std::size_t axis_index(std::string_view label) const;
  std::size_t axis_size(std::string_view label) const { return sizes_[axis_index(label)]; }

  double at(std::span<const std::size_t> index) const;
  double at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

 private:
  AxisList axes_;
  std::vector<std::size_t> sizes_;
  std::vector<double> values_;
};

// Conditional distribution of `target` axes given `given` axes. Slices whose
// conditioning mass is zero are marked undefined and hold no values.
class Kernel {
 public:
  Kernel(AxisList target, std::vector<std::size_t> target_sizes, AxisList given,
         std::vector<std::size_t> given_sizes, std::vector<double> values,
         std::vector<bool> defined);

  const AxisList& target_axes() const { return target_; }
  const AxisList& given_axes() const { return given_; }
  const std::vector<std::size_t>& target_sizes() const { return target_sizes_; }
  const std::vector<std::size_t>& given_sizes() const { return given_sizes_; }
  std::size_t target_count() const { return target_count_; }
  std::size_t given_count() const { return defined_.size(); }

  bool defined(std::size_t given_index) const { return defined_.at(given_index); }
  // Empty span for undefined slices.
  std::span<const double> slice(std::size_t given_index) const;

 private:
  AxisList target_;
  std::vector<std::size_t> target_sizes_;
  AxisList given_;
  std::vector<std::size_t> given_sizes_;
  std::size_t target_count_;
  std::vector<double> values_;
  std::vector<bool> defined_;
};

// Source pair (U, V) with per-letter distortion matrices d1: U x Uhat and
// d2: V x Vhat.
struct SourceModel {
  SourceModel(ProbTensor joint, Eigen::MatrixXd d1, Eigen::MatrixXd d2);

  std::size_t u_size() const { return joint.sizes()[0]; }
  std::size_t v_size() const { return joint.sizes()[1]; }
  std::size_t u_hat_size() const { return static_cast<std::size_t>(d1.cols()); }
  std::size_t v_hat_size() const { return static_cast<std::size_t>(d2.cols()); }
  std::uint64_t fingerprint() const;

  ProbTensor joint;  // axes (U, V)
  Eigen::MatrixXd d1;
  Eigen::MatrixXd d2;
};

// d(a, b) = [a != b] on an rows x cols grid.
Eigen::MatrixXd hamming_distortion(std::size_t rows, std::size_t cols);

// Doubly symmetric binary source: U uniform, V = U flipped with probability p.
ProbTensor dsbs_joint(double p);
SourceModel dsbs_source(double p);

ProbTensor marginal(const ProbTensor& t, const AxisList& keep);
Kernel conditional(const ProbTensor& t, const AxisList& target, const AxisList& given);

// P over axes (A, B) -> P^{(x)n} over axes (A1..An, B1..Bn).
ProbTensor iid_extend(const ProbTensor& pair, int n, std::size_t entry_cap = kDefaultEntryCap);

// p(u, v, x1, x2) = p(u, v) p(x1, x2 | u, v); axes (U, V, X1, X2).
ProbTensor join(const ProbTensor& source, const AuxChannel& channel);

enum class MeasureKind { Entropy, ConditionalEntropy, MutualInformation, ConditionalMutualInformation };

struct InfoMeasure {
  MeasureKind kind;
  AxisList first;
  AxisList second;
  AxisList given;

  static InfoMeasure entropy(AxisList a) { return {MeasureKind::Entropy, std::move(a), {}, {}}; }
  static InfoMeasure conditional_entropy(AxisList a, AxisList given) {
    return {MeasureKind::ConditionalEntropy, std::move(a), {}, std::move(given)};
  }
  static InfoMeasure mutual(AxisList a, AxisList b) {
    return {MeasureKind::MutualInformation, std::move(a), std::move(b), {}};
  }
  static InfoMeasure conditional_mutual(AxisList a, AxisList b, AxisList given) {
    return {MeasureKind::ConditionalMutualInformation, std::move(a), std::move(b), std::move(given)};
  }
};

// Value in bits; results in [-kInfoFloor, 0) are reported as 0.
double info_measure(const ProbTensor& t, const InfoMeasure& m);

double entropy(const ProbTensor& t, const AxisList& axes);
double mutual_information(const ProbTensor& t, const AxisList& a, const AxisList& b,
                          const AxisList& given = {});

// Binary entropy in bits.
double binary_entropy(double p);

}  // namespace mtrd
