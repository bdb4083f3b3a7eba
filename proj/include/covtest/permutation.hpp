#pragma once

// Permutation algorithms for the sphericity, identity, compound symmetry,
// two-sample, K-sample and uncorrelation tests, and the Monte-Carlo p-value.
//
// Replicate i draws its randomness only from (cfg.seed, i); replicates run on
// a bounded pool of cfg.workers threads and write into slots addressed by
// index, so a TestResult is bit-identical for every worker count.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covtest/matrix_core.hpp"
#include "covtest/rng.hpp"
#include "covtest/statistics.hpp"

namespace covtest {

struct PermutationConfig {
  std::size_t r = 100;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  /// Keep every permuted statistic in the result.
  bool retain_permuted = false;
  /// Turn "fewer distinct arrangements than r" from a warning into an InputError.
  bool strict = false;
};

struct TestResult {
  StatisticValue observed;
  double p_value = 1.0;
  std::size_t r = 0;
  std::size_t exceed_count = 0;
  std::optional<std::vector<double>> permuted;
  std::vector<std::string> warnings;
};

/// A permuted statistic counts as an exceedance when it is >= the observed
/// value; values within this distance below it are treated as ties.
inline constexpr double kTieTolerance = 1e-12;

inline bool is_exceedance(double permuted, double observed) {
  return permuted >= observed - kTieTolerance;
}

std::size_t count_exceedances(double observed, std::span<const double> permuted);

/// (#(T(i) >= T_o) + 1) / (r + 1).
double mc_p_value(StatisticValue observed, std::span<const double> permuted);

using ReplicateFn = std::function<double(std::size_t index, rng::Engine& engine)>;

/// Evaluates replicates 0..r-1 on the worker pool. If any replicate throws,
/// the error from the lowest failing index is rethrown; covtest errors are
/// rethrown as DegenerateStatisticError naming the replicate.
std::vector<double> evaluate_replicates(const PermutationConfig& cfg, const ReplicateFn& fn);

/// Observed statistic plus replicates assembled into a TestResult.
TestResult permutation_test(StatisticValue observed, const PermutationConfig& cfg,
                            const ReplicateFn& fn);

// Replicate primitives, exposed for tests and custom designs.
namespace permute {

/// Each row gets its own independent shuffle.
void within_rows(MatrixX<double>& data, rng::Engine& engine);
/// Each column gets its own independent shuffle.
void within_columns(MatrixX<double>& data, rng::Engine& engine);
/// One row permutation per block, applied jointly to that block's columns.
void rows_per_block(MatrixX<double>& data, const BlockPartition& blocks, rng::Engine& engine);
/// Uniform random permutation of 0..n-1.
std::vector<Index> random_order(Index n, rng::Engine& engine);

}  // namespace permute

/// Rows permuted, then columns (the sphericity replicate).
TestResult run_sphericity_test(const DataMatrixd& data, const PermutationConfig& cfg);

/// Column permutations. Covariance kind uses the sphericity statistic,
/// correlation kind the unit-diagonal identity statistic.
TestResult run_identity_test(const DataMatrixd& data, MatrixKind kind, CorrelationMethod method,
                             const PermutationConfig& cfg);

/// Row permutations.
TestResult run_compound_symmetry_test(const DataMatrixd& data, MatrixKind kind,
                                      CorrelationMethod method, const PermutationConfig& cfg);

/// Stacked-row shuffle split back into n1 and n2 rows.
TestResult run_two_sample_test(const DataMatrixd& first, const DataMatrixd& second,
                               MatrixKind kind, CorrelationMethod method,
                               const PermutationConfig& cfg);

/// Stacked-row shuffle re-sliced into contiguous blocks of n1, ..., nK rows.
TestResult run_k_sample_test(std::span<const DataMatrixd> samples, MatrixKind kind,
                             CorrelationMethod method, const PermutationConfig& cfg);

/// Group-column permutation over the given block partition (covariance).
TestResult run_uncorrelation_test(const DataMatrixd& data, const BlockPartition& blocks,
                                  const PermutationConfig& cfg);

enum class TestKind { Sphericity, Identity, CompoundSymmetry, TwoSample, KSample, Uncorrelation };

std::string to_string(TestKind test);
/// Accepts the CLI spellings: sphericity, identity, compound-symmetry, two-sample,
/// k-sample, uncorrelation.
TestKind parse_test_kind(std::string_view name);

struct TestOptions {
  MatrixKind kind = MatrixKind::Covariance;
  /// Only meaningful for the correlation kind; Pearson when unset.
  std::optional<CorrelationMethod> method;
  /// Block sizes, uncorrelation only.
  std::vector<Index> blocks;
};

/// Rejects option combinations that do not apply to `test`, and sample
/// counts that do not match it, before any computation.
void validate_test_options(TestKind test, const TestOptions& options, std::size_t sample_count);

/// Validates, then runs the permutation algorithm for `test`.
TestResult run_test(TestKind test, std::span<const DataMatrixd> samples, const TestOptions& options,
                    const PermutationConfig& cfg);

/// log C(n, k)
double log_binomial(std::uint64_t n, std::uint64_t k);

}  // namespace covtest
