#include "mtrd/probkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mtrd/channel.hpp"
#include "mtrd/error.hpp"
#include "mtrd/hash.hpp"
#include "mtrd/simd/kernels.hpp"

namespace mtrd {
namespace {

std::size_t product_of(const std::vector<std::size_t>& sizes) {
  std::size_t n = 1;
  for (std::size_t s : sizes) n *= s;
  return n;
}

std::vector<std::size_t> positions_of(const ProbTensor& t, const AxisList& labels) {
  std::vector<std::size_t> pos;
  pos.reserve(labels.size());
  for (const auto& label : labels) {
    const std::size_t p = t.axis_index(label);
    if (std::find(pos.begin(), pos.end(), p) != pos.end()) {
      throw Error("axis '" + label + "' listed twice");
    }
    pos.push_back(p);
  }
  return pos;
}

// Sums `values` (shape `sizes`) onto the axes at `keep`, in that order.
std::vector<double> reduce(const std::vector<std::size_t>& sizes, std::span<const double> values,
                           const std::vector<std::size_t>& keep) {
  const std::size_t rank = sizes.size();
  std::vector<std::size_t> dst_stride(rank, 0);
  std::size_t out_size = 1;
  for (std::size_t k = keep.size(); k-- > 0;) {
    dst_stride[keep[k]] = out_size;
    out_size *= sizes[keep[k]];
  }
  std::vector<double> out(out_size, 0.0);
  if (values.empty()) return out;

  std::vector<std::size_t> counter(rank, 0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[offset] += values[i];
    for (std::size_t a = rank; a-- > 0;) {
      if (++counter[a] < sizes[a]) {
        offset += dst_stride[a];
        break;
      }
      counter[a] = 0;
      offset -= (sizes[a] - 1) * dst_stride[a];
    }
  }
  return out;
}

double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

AxisList union_of(std::initializer_list<const AxisList*> lists) {
  AxisList out;
  for (const AxisList* l : lists) {
    for (const auto& a : *l) {
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// ProbTensor

ProbTensor::ProbTensor(AxisList axes, std::vector<std::size_t> sizes, std::vector<double> values,
                       double tolerance)
    : axes_(std::move(axes)), sizes_(std::move(sizes)), values_(std::move(values)) {
  if (axes_.size() != sizes_.size()) throw Error("axis labels and sizes differ in length");
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].empty()) throw Error("empty axis label");
    if (sizes_[i] == 0) throw Error("axis '" + axes_[i] + "' has size 0");
    for (std::size_t j = 0; j < i; ++j) {
      if (axes_[i] == axes_[j]) throw Error("duplicate axis label '" + axes_[i] + "'");
    }
  }
  if (values_.size() != product_of(sizes_)) {
    std::ostringstream msg;
    msg << "expected " << product_of(sizes_) << " values, got " << values_.size();
    throw Error(msg.str());
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) throw Error("probability entries must be finite and >= 0");
  }
  const double total = simd::sum(values_);
  if (std::fabs(total - 1.0) > tolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "probabilities sum to " << total << ", not 1";
    throw Error(msg.str());
  }
}

bool ProbTensor::has_axis(std::string_view label) const {
  return std::find(axes_.begin(), axes_.end(), label) != axes_.end();
}

std::size_t ProbTensor::axis_index(std::string_view label) const {
  const auto it = std::find(axes_.begin(), axes_.end(), label);
  if (it == axes_.end()) throw Error("unknown axis '" + std::string(label) + "'");
  return static_cast<std::size_t>(it - axes_.begin());
}

double ProbTensor::at(std::span<const std::size_t> index) const {
  if (index.size() != sizes_.size()) throw Error("index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t a = 0; a < index.size(); ++a) {
    if (index[a] >= sizes_[a]) throw Error("index out of range on axis '" + axes_[a] + "'");
    flat = flat * sizes_[a] + index[a];
  }
  return values_[flat];
}

// ---------------------------------------------------------------------------
// Kernel

Kernel::Kernel(AxisList target, std::vector<std::size_t> target_sizes, AxisList given,
               std::vector<std::size_t> given_sizes, std::vector<double> values,
               std::vector<bool> defined)
    : target_(std::move(target)),
      target_sizes_(std::move(target_sizes)),
      given_(std::move(given)),
      given_sizes_(std::move(given_sizes)),
      target_count_(product_of(target_sizes_)),
      values_(std::move(values)),
      defined_(std::move(defined)) {
  if (defined_.size() != product_of(given_sizes_)) throw Error("kernel: defined-flag count mismatch");
  if (values_.size() != target_count_ * defined_.size()) throw Error("kernel: value count mismatch");
  for (std::size_t g = 0; g < defined_.size(); ++g) {
    if (!defined_[g]) continue;
    const auto s = slice(g);
    for (double x : s) {
      if (!std::isfinite(x) || x < 0.0) throw Error("kernel: negative or non-finite entry");
    }
    if (std::fabs(simd::sum(s) - 1.0) > kArithmeticTolerance) {
      throw Error("kernel: conditional slice does not sum to 1");
    }
  }
}

std::span<const double> Kernel::slice(std::size_t given_index) const {
  if (!defined(given_index)) return {};
  return std::span<const double>(values_).subspan(given_index * target_count_, target_count_);
}

// ---------------------------------------------------------------------------
// SourceModel

SourceModel::SourceModel(ProbTensor joint_in, Eigen::MatrixXd d1_in, Eigen::MatrixXd d2_in)
    : joint(std::move(joint_in)), d1(std::move(d1_in)), d2(std::move(d2_in)) {
  if (joint.rank() != 2) throw Error("source joint must have exactly two axes (U, V)");
  if (static_cast<std::size_t>(d1.rows()) != u_size()) throw Error("d1 must have |U| rows");
  if (static_cast<std::size_t>(d2.rows()) != v_size()) throw Error("d2 must have |V| rows");
  if (d1.cols() == 0 || d2.cols() == 0) throw Error("reconstruction alphabets must be nonempty");
  if (!d1.allFinite() || (d1.array() < 0.0).any()) throw Error("d1 entries must be finite and >= 0");
  if (!d2.allFinite() || (d2.array() < 0.0).any()) throw Error("d2 entries must be finite and >= 0");
}

std::uint64_t SourceModel::fingerprint() const {
  Fnv1a h;
  for (std::size_t s : joint.sizes()) h.u64(s);
  h.doubles(joint.values());
  h.u64(static_cast<std::uint64_t>(d1.rows()));
  h.u64(static_cast<std::uint64_t>(d1.cols()));
  h.doubles(std::span<const double>(d1.data(), static_cast<std::size_t>(d1.size())));
  h.u64(static_cast<std::uint64_t>(d2.rows()));
  h.u64(static_cast<std::uint64_t>(d2.cols()));
  h.doubles(std::span<const double>(d2.data(), static_cast<std::size_t>(d2.size())));
  return h.value();
}

Eigen::MatrixXd hamming_distortion(std::size_t rows, std::size_t cols) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = i == j ? 0.0 : 1.0;
    }
  }
  return d;
}

ProbTensor dsbs_joint(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("DSBS crossover must lie in [0, 1]");
  const double same = (1.0 - p) / 2.0;
  const double diff = p / 2.0;
  return ProbTensor({"U", "V"}, {2, 2}, {same, diff, diff, same});
}

SourceModel dsbs_source(double p) {
  return SourceModel(dsbs_joint(p), hamming_distortion(2, 2), hamming_distortion(2, 2));
}

// ---------------------------------------------------------------------------
// Operations

ProbTensor marginal(const ProbTensor& t, const AxisList& keep) {
  const auto pos = positions_of(t, keep);
  std::vector<std::size_t> out_sizes;
  for (std::size_t p : pos) out_sizes.push_back(t.sizes()[p]);
  return ProbTensor(keep, std::move(out_sizes), reduce(t.sizes(), t.values(), pos),
                    kArithmeticTolerance);
}

Kernel conditional(const ProbTensor& t, const AxisList& target, const AxisList& given) {
  for (const auto& a : target) {
    if (std::find(given.begin(), given.end(), a) != given.end()) {
      throw Error("axis '" + a + "' appears in both target and given sets");
    }
  }
  auto order = given;
  order.insert(order.end(), target.begin(), target.end());
  const auto pos = positions_of(t, order);
  std::vector<double> raw = reduce(t.sizes(), t.values(), pos);

  std::vector<std::size_t> given_sizes, target_sizes;
  for (std::size_t i = 0; i < given.size(); ++i) given_sizes.push_back(t.sizes()[pos[i]]);
  for (std::size_t i = given.size(); i < pos.size(); ++i) target_sizes.push_back(t.sizes()[pos[i]]);
  const std::size_t g_count = product_of(given_sizes);
  const std::size_t t_count = product_of(target_sizes);

  std::vector<bool> defined(g_count, false);
  for (std::size_t g = 0; g < g_count; ++g) {
    std::span<double> row(raw.data() + g * t_count, t_count);
    const double mass = simd::sum(row);
    if (mass > 0.0) {
      defined[g] = true;
      simd::scale(row, 1.0 / mass, row);
    } else {
      std::fill(row.begin(), row.end(), 0.0);
    }
  }
  return Kernel(target, std::move(target_sizes), given, std::move(given_sizes), std::move(raw),
                std::move(defined));
}

ProbTensor iid_extend(const ProbTensor& pair, int n, std::size_t entry_cap) {
  if (pair.rank() != 2) throw Error("iid_extend expects a two-axis joint");
  if (n < 1) throw Error("iid_extend: n must be >= 1");
  const std::size_t letter = pair.size();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > entry_cap / letter) throw CapExceeded("iid_extend: tensor exceeds entry cap");
    total *= letter;
  }

  // Build the letter-major tensor [(a1,b1),(a2,b2),...] by repeated outer
  // products, then permute to (a1..an, b1..bn).
  std::vector<double> interleaved{1.0};
  for (int i = 0; i < n; ++i) {
    std::vector<double> next(interleaved.size() * letter);
    for (std::size_t j = 0; j < interleaved.size(); ++j) {
      simd::scale(pair.values(), interleaved[j], std::span<double>(next.data() + j * letter, letter));
    }
    interleaved = std::move(next);
  }

  const std::size_t sa = pair.sizes()[0];
  const std::size_t sb = pair.sizes()[1];
  const auto un = static_cast<std::size_t>(n);
  AxisList axes(2 * un);
  std::vector<std::size_t> sizes(2 * un);
  for (std::size_t i = 0; i < un; ++i) {
    axes[i] = pair.axes()[0] + std::to_string(i + 1);
    axes[un + i] = pair.axes()[1] + std::to_string(i + 1);
    sizes[i] = sa;
    sizes[un + i] = sb;
  }
  std::vector<std::size_t> interleaved_sizes(2 * un);
  std::vector<std::size_t> order(2 * un);
  for (std::size_t i = 0; i < un; ++i) {
    interleaved_sizes[2 * i] = sa;
    interleaved_sizes[2 * i + 1] = sb;
    order[i] = 2 * i;
    order[un + i] = 2 * i + 1;
  }
  return ProbTensor(std::move(axes), std::move(sizes), reduce(interleaved_sizes, interleaved, order),
                    kArithmeticTolerance);
}

ProbTensor join(const ProbTensor& source, const AuxChannel& channel) {
  const ChannelSizes& cs = channel.sizes();
  if (source.rank() != 2 || source.sizes()[0] != cs.u || source.sizes()[1] != cs.v) {
    throw Error("join: source alphabet sizes do not match the channel");
  }
  const std::size_t block = cs.slice_size();
  std::vector<double> values(cs.total());
  for (std::size_t uv = 0; uv < cs.u * cs.v; ++uv) {
    simd::scale(channel.values().subspan(uv * block, block), source.values()[uv],
                std::span<double>(values.data() + uv * block, block));
  }
  return ProbTensor({source.axes()[0], source.axes()[1], "X1", "X2"}, {cs.u, cs.v, cs.x1, cs.x2},
                    std::move(values), kArithmeticTolerance);
}

double entropy(const ProbTensor& t, const AxisList& axes) {
  if (axes.empty()) return 0.0;
  return entropy_bits(reduce(t.sizes(), t.values(), positions_of(t, axes)));
}

double info_measure(const ProbTensor& t, const InfoMeasure& m) {
  for (const AxisList* l : {&m.first, &m.second, &m.given}) {
    for (const auto& a : *l) t.axis_index(a);
  }
  double value = 0.0;
  switch (m.kind) {
    case MeasureKind::Entropy:
      value = entropy(t, m.first);
      break;
    case MeasureKind::ConditionalEntropy:
      value = entropy(t, union_of({&m.first, &m.given})) - entropy(t, m.given);
      break;
    case MeasureKind::MutualInformation:
      value = entropy(t, m.first) + entropy(t, m.second) - entropy(t, union_of({&m.first, &m.second}));
      break;
    case MeasureKind::ConditionalMutualInformation:
      value = entropy(t, union_of({&m.first, &m.given})) + entropy(t, union_of({&m.second, &m.given})) -
              entropy(t, union_of({&m.first, &m.second, &m.given})) - entropy(t, m.given);
      break;
  }
  if (value < 0.0 && value >= -kInfoFloor) value = 0.0;
  return value;
}

double mutual_information(const ProbTensor& t, const AxisList& a, const AxisList& b,
                          const AxisList& given) {
  if (given.empty()) return info_measure(t, InfoMeasure::mutual(a, b));
  return info_measure(t, InfoMeasure::conditional_mutual(a, b, given));
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// ---------------------------------------------------------------------------
// AuxChannel

AuxChannel::AuxChannel(ChannelSizes sizes, std::vector<double> values, double tolerance)
    : sizes_(sizes), values_(std::move(values)) {
  if (sizes_.u == 0 || sizes_.v == 0 || sizes_.x1 == 0 || sizes_.x2 == 0) {
    throw Error("channel alphabet sizes must be >= 1");
  }
  if (values_.size() != sizes_.total()) throw Error("channel: value count does not match sizes");
  for (double x : values_) {
    if (!std::isfinite(x) || x < 0.0) throw Error("channel entries must be finite and >= 0");
  }
  for (std::size_t u = 0; u < sizes_.u; ++u) {
    for (std::size_t v = 0; v < sizes_.v; ++v) {
      if (std::fabs(simd::sum(slice(u, v)) - 1.0) > tolerance) {
        throw Error("channel slice (u=" + std::to_string(u) + ", v=" + std::to_string(v) +
                    ") does not sum to 1");
      }
    }
  }
}

AuxChannel AuxChannel::product(ChannelSizes sizes, std::span<const double> a, std::span<const double> b) {
  if (a.size() != sizes.u * sizes.x1 || b.size() != sizes.v * sizes.x2) {
    throw Error("product channel: kernel shapes do not match sizes");
  }
  std::vector<double> values(sizes.total());
  std::size_t k = 0;
  for (std::size_t u = 0; u < sizes.u; ++u) {
    for (std::size_t v = 0; v < sizes.v; ++v) {
      for (std::size_t i = 0; i < sizes.x1; ++i) {
        simd::scale(b.subspan(v * sizes.x2, sizes.x2), a[u * sizes.x1 + i],
                    std::span<double>(values.data() + k, sizes.x2));
        k += sizes.x2;
      }
    }
  }
  return AuxChannel(sizes, std::move(values), kArithmeticTolerance);
}

AuxChannel AuxChannel::normalized(ChannelSizes sizes, std::vector<double> values) {
  if (values.size() != sizes.total()) throw Error("channel: value count does not match sizes");
  const std::size_t block = sizes.slice_size();
  for (std::size_t uv = 0; uv < sizes.u * sizes.v; ++uv) {
    std::span<double> s(values.data() + uv * block, block);
    const double total = simd::sum(s);
    if (!(total > 0.0)) throw Error("channel slice has zero mass");
    simd::scale(s, 1.0 / total, s);
  }
  return AuxChannel(sizes, std::move(values), kArithmeticTolerance);
}

AuxChannel AuxChannel::from_kernel(const Kernel& k) {
  if (k.target_sizes().size() != 2 || k.given_sizes().size() != 2) {
    throw Error("channel kernel must have target (X1, X2) and given (U, V)");
  }
  const ChannelSizes sizes{k.given_sizes()[0], k.given_sizes()[1], k.target_sizes()[0],
                           k.target_sizes()[1]};
  std::vector<double> values;
  values.reserve(sizes.total());
  for (std::size_t g = 0; g < k.given_count(); ++g) {
    if (!k.defined(g)) throw Error("channel kernel has an undefined slice");
    const auto s = k.slice(g);
    values.insert(values.end(), s.begin(), s.end());
  }
  return AuxChannel(sizes, std::move(values), kArithmeticTolerance);
}

Kernel AuxChannel::as_kernel() const {
  return Kernel({"X1", "X2"}, {sizes_.x1, sizes_.x2}, {"U", "V"}, {sizes_.u, sizes_.v}, values_,
                std::vector<bool>(sizes_.u * sizes_.v, true));
}

std::uint64_t AuxChannel::fingerprint() const {
  Fnv1a h;
  h.u64(sizes_.u);
  h.u64(sizes_.v);
  h.u64(sizes_.x1);
  h.u64(sizes_.x2);
  h.doubles(values_);
  return h.value();
}

}  // namespace mtrd
