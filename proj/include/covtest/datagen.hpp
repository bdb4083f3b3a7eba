#pragma once

// Data-generation models for type-I-error and power studies: the linear map
// X = Gamma Z, the four-block diagonal model, moving-average models and the
// sparse-difference covariance pair, plus signal-to-noise utilities.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "covtest/matrix_core.hpp"
#include "covtest/rng.hpp"

namespace covtest::datagen {

struct Normal {
  double mean = 0.0;
  double sd = 1.0;
};
/// Shape-scale parameterization: mean shape*scale, variance shape*scale^2.
struct Gamma {
  double shape = 1.0;
  double scale = 1.0;
};
struct LogNormal {
  double log_mean = 0.0;
  double log_sd = 1.0;
};
/// Unscaled Student t, variance df/(df-2).
struct StudentT {
  double df = 5.0;
};
/// Location-scale Gumbel (maximum extreme value).
struct Gumbel {
  double location = 0.0;
  double scale = 1.0;
};
struct Poisson {
  double rate = 1.0;
};
struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};
struct Bernoulli {
  double prob = 0.5;
};

/// A univariate distribution with validated parameters.
class Distribution {
 public:
  using Family = std::variant<Normal, Gamma, LogNormal, StudentT, Gumbel, Poisson, Uniform, Bernoulli>;

  Distribution() : Distribution(Normal{}) {}
  /// Throws InputError on invalid parameters (sd <= 0, shape <= 0, ...).
  Distribution(Family family);  // NOLINT(google-explicit-constructor)
  template <typename T>
    requires std::is_constructible_v<Family, T> && (!std::is_same_v<std::decay_t<T>, Family>)
  Distribution(T params) : Distribution(Family(std::move(params))) {}  // NOLINT

  /// Parses e.g. "normal(0,1)", "gamma(0.5,sqrt(2))", "t(5)", "gumbel(10,2)".
  static Distribution parse(std::string_view text);

  const Family& family() const noexcept { return family_; }

  double mean() const;
  /// Infinite for t with df <= 2.
  double variance() const;
  /// mean / sd; 0 when the mean is 0.
  double snr() const;

  /// Fills every coefficient of `out` column by column.
  void fill(MatrixX<double>& out, rng::Engine& engine) const;

  /// Canonical text form, round-trips through parse() exactly.
  std::string to_string() const;

  friend bool operator==(const Distribution&, const Distribution&);

 private:
  Family family_;
};

/// X = Gamma Z, Gamma p x m with p <= m, Z with i.i.d. entries (no centering).
struct ChenLinearMap {
  MatrixX<double> gamma;
  Distribution z;
};

/// Four q-column blocks X_b = L U_b, L the Cholesky factor of (1-rho)I + rho J.
struct BlockDiagonal {
  Index q = 1;
  double rho = 0.0;
  std::array<Distribution, 4> block_dists;
};

/// Order 2: X_j = Z_j + 2 Z_{j+1}. Order 3: X_j = Z_j + 2 Z_{j+1} + Z_{j+2}.
struct MovingAverage {
  int order = 2;
  Index p = 1;
  Distribution z;
};

/// X = chol(Sigma) U with Sigma the null or alternative member of the sparse pair.
struct SparseCai {
  Index p = 9;
  std::uint64_t structure_seed = 0;
  std::uint64_t delta_seed = 0;
  Distribution u;
  bool alternative = false;
};

using GeneratorSpec = std::variant<ChenLinearMap, BlockDiagonal, MovingAverage, SparseCai>;

/// Throws InputError when the spec violates its invariants.
void validate(const GeneratorSpec& spec);

/// Number of columns generated.
Index dimension(const GeneratorSpec& spec);

/// Population covariance, when every underlying variance is finite.
std::optional<SymmetricMatrixd> population_covariance(const GeneratorSpec& spec);

/// n i.i.d. rows from the model, a pure function of (spec, n, seed).
DataMatrixd generate(const GeneratorSpec& spec, Index n, std::uint64_t seed);

/// A covariance matrix together with a factor Gamma, Gamma Gamma^T = Sigma.
struct CovarianceModel {
  SymmetricMatrixd sigma;
  MatrixX<double> gamma;
  std::vector<std::string> warnings;
};

/// sigma0^2 I + sigma1^2 diag(I_k, 0) with k = floor(lambda p).
CovarianceModel sigma_alternative_diag(Index p, double lambda, double sigma0_sq, double sigma1_sq);

/// (1-rho) sigma0^2 I + rho sigma1^2 J, factored as the p x (p+1) matrix
/// [sqrt((1-rho) sigma0^2) I | sqrt(rho sigma1^2) 1].
CovarianceModel sigma_alternative_cs(Index p, double rho, double sigma0_sq, double sigma1_sq);

/// The randomly drawn sparse base Sigma* and its normalization.
struct SparseStructure {
  SymmetricMatrixd sigma_star;
  double delta0 = 0.0;
  /// (Sigma* + delta0 I) / (1 + delta0)
  SymmetricMatrixd normalized;
};

struct SparsePair {
  SymmetricMatrixd null_sigma;
  SymmetricMatrixd alt_sigma;
  SymmetricMatrixd delta;
  double delta0 = 0.0;
  double delta1 = 0.0;
};

/// Sigma*: unit diagonal, off-diagonals 0.5 with probability 0.05. Needs p >= 9.
SparseStructure sparse_structure(Index p, std::uint64_t structure_seed);

/// Delta has 16 strictly-lower entries of 0.9, mirrored above.
SymmetricMatrixd sparse_delta(Index p, std::uint64_t delta_seed);

SparsePair sparse_cai_pair(const SparseStructure& structure, std::uint64_t delta_seed);
SparsePair sparse_cai_pair(Index p, std::uint64_t structure_seed, std::uint64_t delta_seed);

/// Sample mean over sample standard deviation (divisor n - 1).
double ssnr(std::span<const double> sample);

/// Key-value text form ("key = value" per line, '#' comments).
std::string to_config(const GeneratorSpec& spec);
GeneratorSpec from_config(std::string_view text);

/// Parses "key = value" lines into ordered pairs; rejects malformed lines.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

}  // namespace covtest::datagen
