#pragma once

// Closed-form "one minus generalized cosine" statistics for the one-sample,
// two-sample and K-sample tests. Every value lies in [0, 2].

#include <span>
#include <string_view>
#include <vector>

#include "covtest/matrix_core.hpp"

namespace covtest {

enum class StatisticKind {
  Sphericity,           ///< 1 - tr(S) / (sqrt(p) |vech S|), also the covariance identity test
  IdentityCorrelation,  ///< 1 - sqrt(p) / |vech S|
  CompoundSymmetry,     ///< vech* against vech*(J)
  TwoSampleCovariance,  ///< vech cosine between two samples
  TwoSampleCorrelation, ///< vech* cosine between two samples
  KSampleCovariance,    ///< max over pairwise covariance statistics
  KSampleCorrelation,   ///< max over pairwise correlation statistics
  Uncorrelation,        ///< vech against block-diagonal ones
};

std::string_view to_string(StatisticKind kind);

struct StatisticValue {
  double value = 0.0;
  StatisticKind kind = StatisticKind::Sphericity;
};

/// Ordered, positive block sizes summing to p.
class BlockPartition {
 public:
  BlockPartition(std::vector<Index> sizes, Index p);

  const std::vector<Index>& sizes() const noexcept { return sizes_; }
  Index dim() const noexcept { return dim_; }
  /// First column of block b.
  Index offset(std::size_t b) const { return offsets_.at(b); }
  std::size_t count() const noexcept { return sizes_.size(); }

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index dim_;
};

StatisticValue sphericity_statistic(const SymmetricMatrixd& s);

/// Requires unit diagonal within 1e-9.
StatisticValue identity_correlation_statistic(const SymmetricMatrixd& s);

StatisticValue compound_symmetry_statistic(const SymmetricMatrixd& s);

/// Covariance kind compares vech images, correlation kind compares vech*.
StatisticValue two_sample_statistic(const SymmetricMatrixd& s1, const SymmetricMatrixd& s2,
                                    MatrixKind kind);

StatisticValue k_sample_statistic(std::span<const SymmetricMatrixd> samples, MatrixKind kind);

StatisticValue uncorrelation_statistic(const SymmetricMatrixd& s, const BlockPartition& blocks);

}  // namespace covtest
