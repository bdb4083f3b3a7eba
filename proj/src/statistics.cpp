#include "covtest/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace covtest {
namespace {

constexpr double kUnitDiagonalTolerance = 1e-9;

double one_minus(double cosine_value) { return 1.0 - std::clamp(cosine_value, -1.0, 1.0); }

}  // namespace

std::string_view to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::Sphericity:
      return "sphericity";
    case StatisticKind::IdentityCorrelation:
      return "identity-correlation";
    case StatisticKind::CompoundSymmetry:
      return "compound-symmetry";
    case StatisticKind::TwoSampleCovariance:
      return "two-sample-covariance";
    case StatisticKind::TwoSampleCorrelation:
      return "two-sample-correlation";
    case StatisticKind::KSampleCovariance:
      return "k-sample-covariance";
    case StatisticKind::KSampleCorrelation:
      return "k-sample-correlation";
    case StatisticKind::Uncorrelation:
      return "uncorrelation";
  }
  return "unknown";
}

BlockPartition::BlockPartition(std::vector<Index> sizes, Index p)
    : sizes_(std::move(sizes)), dim_(p) {
  if (sizes_.empty()) throw InputError("block partition is empty");
  Index total = 0;
  for (Index s : sizes_) {
    if (s < 1) throw InputError("block sizes must be positive, got " + std::to_string(s));
    offsets_.push_back(total);
    total += s;
  }
  if (total != p) {
    throw InputError("block sizes sum to " + std::to_string(total) + " but p = " +
                     std::to_string(p));
  }
}

StatisticValue sphericity_statistic(const SymmetricMatrixd& s) {
  const double norm = vech(s).norm();
  if (!(norm > 0.0)) {
    throw DegenerateStatisticError("sphericity statistic is undefined for an all-zero matrix");
  }
  const double p = static_cast<double>(s.dim());
  return {one_minus(s.trace() / (std::sqrt(p) * norm)), StatisticKind::Sphericity};
}

StatisticValue identity_correlation_statistic(const SymmetricMatrixd& s) {
  for (Index i = 0; i < s.dim(); ++i) {
    if (std::abs(s(i, i) - 1.0) > kUnitDiagonalTolerance) {
      throw InputError("identity correlation statistic needs a unit diagonal; entry " +
                       std::to_string(i) + " is " + std::to_string(s(i, i)));
    }
  }
  const double p = static_cast<double>(s.dim());
  return {one_minus(std::sqrt(p) / vech(s).norm()), StatisticKind::IdentityCorrelation};
}

StatisticValue compound_symmetry_statistic(const SymmetricMatrixd& s) {
  const VectorX<double> off = vech_star(s);
  const double norm = off.norm();
  if (!(norm > 0.0)) {
    throw DegenerateStatisticError(
        "compound symmetry statistic is undefined: all off-diagonal entries are zero");
  }
  const double pairs = static_cast<double>(off.size());
  return {one_minus(off.sum() / (std::sqrt(pairs) * norm)), StatisticKind::CompoundSymmetry};
}

StatisticValue two_sample_statistic(const SymmetricMatrixd& s1, const SymmetricMatrixd& s2,
                                    MatrixKind kind) {
  if (s1.dim() != s2.dim()) {
    throw InputError("two-sample statistic needs equal dimensions, got p = " +
                     std::to_string(s1.dim()) + " and p = " + std::to_string(s2.dim()));
  }
  if (kind == MatrixKind::Covariance) {
    return {one_minus(cosine(vech(s1), vech(s2))), StatisticKind::TwoSampleCovariance};
  }
  return {one_minus(cosine(vech_star(s1), vech_star(s2))), StatisticKind::TwoSampleCorrelation};
}

StatisticValue k_sample_statistic(std::span<const SymmetricMatrixd> samples, MatrixKind kind) {
  if (samples.size() < 2) throw InputError("K-sample statistic needs K >= 2 samples");
  double worst = 0.0;
  for (std::size_t a = 0; a < samples.size(); ++a)
    for (std::size_t b = a + 1; b < samples.size(); ++b)
      worst = std::max(worst, two_sample_statistic(samples[a], samples[b], kind).value);
  return {worst, kind == MatrixKind::Covariance ? StatisticKind::KSampleCovariance
                                                : StatisticKind::KSampleCorrelation};
}

StatisticValue uncorrelation_statistic(const SymmetricMatrixd& s, const BlockPartition& blocks) {
  if (blocks.dim() != s.dim()) {
    throw InputError("block partition covers " + std::to_string(blocks.dim()) +
                     " columns but the matrix has p = " + std::to_string(s.dim()));
  }
  const double norm = vech(s).norm();
  if (!(norm > 0.0)) {
    throw DegenerateStatisticError("uncorrelation statistic is undefined for an all-zero matrix");
  }
  // vech(S)^T vech(diag(J_1..J_k)) is the sum of each block's lower triangle.
  double inner = 0.0;
  double target_sq = 0.0;
  for (std::size_t b = 0; b < blocks.count(); ++b) {
    const Index start = blocks.offset(b);
    const Index size = blocks.sizes()[b];
    inner += s.dense()
                 .block(start, start, size, size)
                 .template triangularView<Eigen::Lower>()
                 .toDenseMatrix()
                 .sum();
    target_sq += 0.5 * static_cast<double>(size) * static_cast<double>(size + 1);
  }
  return {one_minus(inner / (std::sqrt(target_sq) * norm)), StatisticKind::Uncorrelation};
}

}  // namespace covtest
