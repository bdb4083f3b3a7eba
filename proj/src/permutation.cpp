#include "covtest/permutation.hpp"

#include "covtest/parallel.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

namespace covtest {
namespace {

double log_factorial(double n) { return std::lgamma(n + 1.0); }

/// Appends a warning (or throws under strict) when the design admits fewer
/// distinct arrangements than requested replicates.
void check_arrangements(double log_count, const std::string& what, const PermutationConfig& cfg,
                        std::vector<std::string>& warnings) {
  if (log_count >= std::log(static_cast<double>(cfg.r))) return;
  std::ostringstream msg;
  msg << what << " admits only " << std::llround(std::exp(log_count))
      << " distinct arrangements, fewer than r = " << cfg.r
      << "; replicates are sampled with replacement";
  if (cfg.strict) throw InputError(msg.str());
  warnings.push_back(msg.str());
}

MatrixX<double> stack_rows(std::span<const DataMatrixd> samples) {
  Index rows = 0;
  for (const auto& s : samples) rows += s.n();
  MatrixX<double> stacked(rows, samples.front().p());
  Index at = 0;
  for (const auto& s : samples) {
    stacked.middleRows(at, s.n()) = s.values();
    at += s.n();
  }
  return stacked;
}

void require_equal_p(std::span<const DataMatrixd> samples) {
  for (std::size_t k = 1; k < samples.size(); ++k) {
    if (samples[k].p() != samples[0].p()) {
      throw InputError("samples must share p: sample 1 has p = " + std::to_string(samples[0].p()) +
                       ", sample " + std::to_string(k + 1) +
                       " has p = " + std::to_string(samples[k].p()));
    }
  }
}

}  // namespace

std::size_t count_exceedances(double observed, std::span<const double> permuted) {
  return static_cast<std::size_t>(std::count_if(
      permuted.begin(), permuted.end(), [&](double t) { return is_exceedance(t, observed); }));
}

double mc_p_value(StatisticValue observed, std::span<const double> permuted) {
  if (permuted.empty()) throw InputError("Monte-Carlo p-value needs at least one replicate");
  const auto exceed = count_exceedances(observed.value, permuted);
  return static_cast<double>(exceed + 1) / static_cast<double>(permuted.size() + 1);
}

std::vector<double> evaluate_replicates(const PermutationConfig& cfg, const ReplicateFn& fn) {
  if (cfg.r < 1) throw InputError("number of permutations must be >= 1");
  const std::size_t r = cfg.r;
  std::vector<double> stats(r, 0.0);

  const auto failure = parallel_for(r, cfg.workers, [&](std::size_t i) {
    rng::Engine engine = rng::replicate_engine(cfg.seed, i);
    stats[i] = fn(i, engine);
  });

  if (failure) {
    const std::string where = "permutation replicate " + std::to_string(failure->index);
    try {
      std::rethrow_exception(failure->error);
    } catch (const InternalError&) {
      throw;
    } catch (const Error& e) {
      throw DegenerateStatisticError(where + ": " + e.what());
    } catch (const std::exception& e) {
      throw InternalError(where + ": " + e.what());
    }
  }
  return stats;
}

TestResult permutation_test(StatisticValue observed, const PermutationConfig& cfg,
                            const ReplicateFn& fn) {
  std::vector<double> permuted = evaluate_replicates(cfg, fn);
  TestResult result;
  result.observed = observed;
  result.r = cfg.r;
  result.exceed_count = count_exceedances(observed.value, permuted);
  result.p_value = static_cast<double>(result.exceed_count + 1) / static_cast<double>(cfg.r + 1);
  if (cfg.retain_permuted) result.permuted = std::move(permuted);
  return result;
}

namespace permute {

void within_rows(MatrixX<double>& data, rng::Engine& engine) {
  for (Index i = 0; i < data.rows(); ++i) {
    auto row = data.row(i);
    rng::shuffle_entries(row, engine);
  }
}

void within_columns(MatrixX<double>& data, rng::Engine& engine) {
  for (Index j = 0; j < data.cols(); ++j) {
    auto col = data.col(j);
    rng::shuffle_entries(col, engine);
  }
}

std::vector<Index> random_order(Index n, rng::Engine& engine) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng::shuffle(order, engine);
  return order;
}

void rows_per_block(MatrixX<double>& data, const BlockPartition& blocks, rng::Engine& engine) {
  for (std::size_t b = 0; b < blocks.count(); ++b) {
    const std::vector<Index> order = random_order(data.rows(), engine);
    auto block = data.middleCols(blocks.offset(b), blocks.sizes()[b]);
    const MatrixX<double> source = block;
    block = source(order, Eigen::all);
  }
}

}  // namespace permute

TestResult run_sphericity_test(const DataMatrixd& data, const PermutationConfig& cfg) {
  const StatisticValue observed = sphericity_statistic(sample_covariance(data));
  std::vector<std::string> warnings;
  const double n = static_cast<double>(data.n());
  const double p = static_cast<double>(data.p());
  check_arrangements(n * log_factorial(p) + p * log_factorial(n), "row-then-column permutation",
                     cfg, warnings);
  TestResult result = permutation_test(observed, cfg, [&](std::size_t, rng::Engine& engine) {
    MatrixX<double> shuffled = data.values();
    permute::within_rows(shuffled, engine);
    permute::within_columns(shuffled, engine);
    return sphericity_statistic(sample_covariance(shuffled)).value;
  });
  result.warnings = std::move(warnings);
  return result;
}

TestResult run_identity_test(const DataMatrixd& data, MatrixKind kind, CorrelationMethod method,
                             const PermutationConfig& cfg) {
  std::vector<std::string> warnings;
  check_arrangements((static_cast<double>(data.p()) - 1.0) * log_factorial(static_cast<double>(data.n())),
                     "column permutation", cfg, warnings);

  TestResult result;
  if (kind == MatrixKind::Covariance) {
    const SymmetricMatrixd s = sample_covariance(data);
    const StatisticValue observed = sphericity_statistic(s);
    result = permutation_test(observed, cfg, [&](std::size_t, rng::Engine& engine) {
      MatrixX<double> shuffled = data.values();
      permute::within_columns(shuffled, engine);
      const SymmetricMatrixd permuted = sample_covariance(shuffled);
#ifndef NDEBUG
      // Column shuffles leave every column variance, hence the diagonal, unchanged.
      for (Index i = 0; i < s.dim(); ++i)
        assert(std::abs(permuted(i, i) - s(i, i)) <= 1e-12 * std::max(1.0, std::abs(s(i, i))));
#endif
      return sphericity_statistic(permuted).value;
    });
  } else {
    // Ranks commute with column shuffles, so Spearman reduces to Pearson on
    // ranks computed once.
    MatrixX<double> base = data.values();
    CorrelationMethod replicate_method = method;
    if (method == CorrelationMethod::Spearman) {
      detail::require_two_distinct_values(base);
      for (Index j = 0; j < base.cols(); ++j) base.col(j) = detail::average_ranks(data.values().col(j));
      replicate_method = CorrelationMethod::Pearson;
    }
    const StatisticValue observed =
        identity_correlation_statistic(sample_correlation(base, replicate_method));
    result = permutation_test(observed, cfg, [&](std::size_t, rng::Engine& engine) {
      MatrixX<double> shuffled = base;
      permute::within_columns(shuffled, engine);
      return identity_correlation_statistic(sample_correlation(shuffled, replicate_method)).value;
    });
  }
  result.warnings = std::move(warnings);
  return result;
}

TestResult run_compound_symmetry_test(const DataMatrixd& data, MatrixKind kind,
                                      CorrelationMethod method, const PermutationConfig& cfg) {
  const StatisticValue observed =
      compound_symmetry_statistic(sample_matrix(data.values(), kind, method));
  std::vector<std::string> warnings;
  check_arrangements(static_cast<double>(data.n()) * log_factorial(static_cast<double>(data.p())),
                     "within-row permutation", cfg, warnings);
  TestResult result = permutation_test(observed, cfg, [&](std::size_t, rng::Engine& engine) {
    MatrixX<double> shuffled = data.values();
    permute::within_rows(shuffled, engine);
    return compound_symmetry_statistic(sample_matrix(shuffled, kind, method)).value;
  });
  result.warnings = std::move(warnings);
  return result;
}

TestResult run_two_sample_test(const DataMatrixd& first, const DataMatrixd& second,
                               MatrixKind kind, CorrelationMethod method,
                               const PermutationConfig& cfg) {
  const std::vector<DataMatrixd> samples{first, second};
  TestResult result = run_k_sample_test(samples, kind, method, cfg);
  // K = 2 reduces the max to the single pairwise statistic.
  result.observed.kind = kind == MatrixKind::Covariance ? StatisticKind::TwoSampleCovariance
                                                        : StatisticKind::TwoSampleCorrelation;
  return result;
}

TestResult run_k_sample_test(std::span<const DataMatrixd> samples, MatrixKind kind,
                             CorrelationMethod method, const PermutationConfig& cfg) {
  if (samples.size() < 2) throw InputError("K-sample test needs at least 2 samples");
  require_equal_p(samples);

  std::vector<SymmetricMatrixd> matrices;
  matrices.reserve(samples.size());
  for (const auto& s : samples) matrices.push_back(sample_matrix(s.values(), kind, method));
  const StatisticValue observed = k_sample_statistic(matrices, kind);

  std::vector<Index> sizes;
  std::uint64_t total = 0;
  std::uint64_t smallest = std::numeric_limits<std::uint64_t>::max();
  for (const auto& s : samples) {
    sizes.push_back(s.n());
    total += static_cast<std::uint64_t>(s.n());
    smallest = std::min(smallest, static_cast<std::uint64_t>(s.n()));
  }
  std::vector<std::string> warnings;
  check_arrangements(log_binomial(total, smallest), "stacked-row shuffle (C(n, n_min))", cfg,
                     warnings);

  const MatrixX<double> stacked = stack_rows(samples);
  TestResult result = permutation_test(observed, cfg, [&](std::size_t, rng::Engine& engine) {
    const std::vector<Index> order = permute::random_order(stacked.rows(), engine);
    std::vector<SymmetricMatrixd> permuted;
    permuted.reserve(sizes.size());
    std::size_t at = 0;
    for (Index size : sizes) {
      const std::span<const Index> rows(order.data() + at, static_cast<std::size_t>(size));
      const MatrixX<double> part = stacked(rows, Eigen::all);
      permuted.push_back(sample_matrix(part, kind, method));
      at += static_cast<std::size_t>(size);
    }
    return k_sample_statistic(permuted, kind).value;
  });
  result.warnings = std::move(warnings);
  return result;
}

TestResult run_uncorrelation_test(const DataMatrixd& data, const BlockPartition& blocks,
                                  const PermutationConfig& cfg) {
  const StatisticValue observed = uncorrelation_statistic(sample_covariance(data), blocks);
  std::vector<std::string> warnings;
  check_arrangements((static_cast<double>(blocks.count()) - 1.0) *
                         log_factorial(static_cast<double>(data.n())),
                     "group-column permutation", cfg, warnings);
  TestResult result = permutation_test(observed, cfg, [&](std::size_t, rng::Engine& engine) {
    MatrixX<double> shuffled = data.values();
    permute::rows_per_block(shuffled, blocks, engine);
    return uncorrelation_statistic(sample_covariance(shuffled), blocks).value;
  });
  result.warnings = std::move(warnings);
  return result;
}

std::string to_string(TestKind test) {
  switch (test) {
    case TestKind::Sphericity: return "sphericity";
    case TestKind::Identity: return "identity";
    case TestKind::CompoundSymmetry: return "compound-symmetry";
    case TestKind::TwoSample: return "two-sample";
    case TestKind::KSample: return "k-sample";
    case TestKind::Uncorrelation: return "uncorrelation";
  }
  return "unknown";
}

TestKind parse_test_kind(std::string_view name) {
  for (TestKind t : {TestKind::Sphericity, TestKind::Identity, TestKind::CompoundSymmetry,
                     TestKind::TwoSample, TestKind::KSample, TestKind::Uncorrelation}) {
    if (name == to_string(t)) return t;
  }
  throw InputError("unknown test '" + std::string(name) + "'");
}

void validate_test_options(TestKind test, const TestOptions& options, std::size_t sample_count) {
  const std::string name = to_string(test);
  if (options.method && options.kind == MatrixKind::Covariance) {
    throw InputError("a correlation method applies only to the correlation matrix kind");
  }
  if (options.kind == MatrixKind::Correlation &&
      (test == TestKind::Sphericity || test == TestKind::Uncorrelation)) {
    throw InputError(name + " is defined for covariance matrices only");
  }
  if (!options.blocks.empty() && test != TestKind::Uncorrelation) {
    throw InputError("block sizes apply only to the uncorrelation test");
  }
  if (test == TestKind::Uncorrelation && options.blocks.size() < 2) {
    throw InputError("uncorrelation needs at least two blocks");
  }
  const std::size_t want = test == TestKind::TwoSample ? 2 : 1;
  if (test == TestKind::KSample) {
    if (sample_count < 2) {
      throw InputError("k-sample needs at least 2 samples, got " + std::to_string(sample_count));
    }
  } else if (sample_count != want) {
    throw InputError(name + " needs exactly " + std::to_string(want) + " sample(s), got " +
                     std::to_string(sample_count));
  }
}

TestResult run_test(TestKind test, std::span<const DataMatrixd> samples, const TestOptions& options,
                    const PermutationConfig& cfg) {
  validate_test_options(test, options, samples.size());
  const CorrelationMethod method = options.method.value_or(CorrelationMethod::Pearson);
  switch (test) {
    case TestKind::Sphericity: return run_sphericity_test(samples[0], cfg);
    case TestKind::Identity: return run_identity_test(samples[0], options.kind, method, cfg);
    case TestKind::CompoundSymmetry:
      return run_compound_symmetry_test(samples[0], options.kind, method, cfg);
    case TestKind::TwoSample:
      return run_two_sample_test(samples[0], samples[1], options.kind, method, cfg);
    case TestKind::KSample: return run_k_sample_test(samples, options.kind, method, cfg);
    case TestKind::Uncorrelation:
      return run_uncorrelation_test(samples[0], BlockPartition(options.blocks, samples[0].p()), cfg);
  }
  throw InternalError("unhandled test kind");
}

double log_binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  const auto nd = static_cast<double>(n);
  const auto kd = static_cast<double>(k);
  return log_factorial(nd) - log_factorial(kd) - log_factorial(nd - kd);
}

}  // namespace covtest
