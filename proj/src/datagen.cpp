#include "covtest/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace covtest::datagen {
namespace {

constexpr double kEulerGamma = 0.57721566490153286;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_number(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t.rfind("sqrt(", 0) == 0 && t.back() == ')') {
    const double inner = parse_number(std::string_view(t).substr(5, t.size() - 6));
    if (inner < 0) throw InputError("sqrt of a negative number: " + t);
    return std::sqrt(inner);
  }
  double v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw InputError("not a number: '" + t + "'");
  }
  return v;
}

/// Splits on commas that are not nested inside parentheses.
std::vector<std::string> split_top_level(std::string_view s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == sep && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

double min_eigenvalue(const SymmetricMatrixd& m) {
  return eigenvalues_descending(m)(m.dim() - 1);
}

MatrixX<double> lower_cholesky(const SymmetricMatrixd& m, const char* what) {
  Eigen::LLT<MatrixX<double>> llt(m.dense());
  if (llt.info() != Eigen::Success) {
    throw InternalError(std::string("Cholesky factorization failed for ") + what);
  }
  return llt.matrixL();
}

}  // namespace

// ---------------------------------------------------------------------------
// Distribution

Distribution::Distribution(Family family) : family_(family) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Normal>) {
          require(std::isfinite(d.mean) && d.sd > 0 && std::isfinite(d.sd), "normal needs sd > 0");
        } else if constexpr (std::is_same_v<T, Gamma>) {
          require(d.shape > 0 && d.scale > 0, "gamma needs shape > 0 and scale > 0");
        } else if constexpr (std::is_same_v<T, LogNormal>) {
          require(std::isfinite(d.log_mean) && d.log_sd > 0, "log-normal needs log sd > 0");
        } else if constexpr (std::is_same_v<T, StudentT>) {
          require(d.df > 0, "t needs df > 0");
        } else if constexpr (std::is_same_v<T, Gumbel>) {
          require(std::isfinite(d.location) && d.scale > 0, "gumbel needs scale > 0");
        } else if constexpr (std::is_same_v<T, Poisson>) {
          require(d.rate > 0, "poisson needs rate > 0");
        } else if constexpr (std::is_same_v<T, Uniform>) {
          require(std::isfinite(d.lo) && std::isfinite(d.hi) && d.lo < d.hi,
                  "uniform needs lo < hi");
        } else {
          require(d.prob >= 0 && d.prob <= 1, "bernoulli needs 0 <= prob <= 1");
        }
      },
      family_);
}

Distribution Distribution::parse(std::string_view text) {
  const std::string t = lower(trim(text));
  const auto open = t.find('(');
  if (open == std::string::npos || t.back() != ')') {
    throw InputError("distribution must look like name(args): '" + t + "'");
  }
  const std::string name = trim(std::string_view(t).substr(0, open));
  std::vector<double> args;
  for (const auto& a : split_top_level(std::string_view(t).substr(open + 1, t.size() - open - 2), ',')) {
    args.push_back(parse_number(a));
  }
  auto want = [&](std::size_t count) {
    require(args.size() == count, name + " takes " + std::to_string(count) + " parameter(s)");
  };
  if (name == "normal" || name == "n") {
    want(2);
    return Normal{args[0], args[1]};
  }
  if (name == "gamma") {
    want(2);
    return Gamma{args[0], args[1]};
  }
  if (name == "lognormal" || name == "log-normal") {
    want(2);
    return LogNormal{args[0], args[1]};
  }
  if (name == "t" || name == "student-t" || name == "studentt") {
    want(1);
    return StudentT{args[0]};
  }
  if (name == "gumbel") {
    want(2);
    return Gumbel{args[0], args[1]};
  }
  if (name == "poisson") {
    want(1);
    return Poisson{args[0]};
  }
  if (name == "uniform") {
    want(2);
    return Uniform{args[0], args[1]};
  }
  if (name == "bernoulli") {
    want(1);
    return Bernoulli{args[0]};
  }
  throw InputError("unknown distribution '" + name + "'");
}

double Distribution::mean() const {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Normal>) return d.mean;
        else if constexpr (std::is_same_v<T, Gamma>) return d.shape * d.scale;
        else if constexpr (std::is_same_v<T, LogNormal>)
          return std::exp(d.log_mean + 0.5 * d.log_sd * d.log_sd);
        else if constexpr (std::is_same_v<T, StudentT>)
          return d.df > 1 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        else if constexpr (std::is_same_v<T, Gumbel>) return d.location + d.scale * kEulerGamma;
        else if constexpr (std::is_same_v<T, Poisson>) return d.rate;
        else if constexpr (std::is_same_v<T, Uniform>) return 0.5 * (d.lo + d.hi);
        else return d.prob;
      },
      family_);
}

double Distribution::variance() const {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Normal>) return d.sd * d.sd;
        else if constexpr (std::is_same_v<T, Gamma>) return d.shape * d.scale * d.scale;
        else if constexpr (std::is_same_v<T, LogNormal>) {
          const double s2 = d.log_sd * d.log_sd;
          return std::expm1(s2) * std::exp(2 * d.log_mean + s2);
        } else if constexpr (std::is_same_v<T, StudentT>)
          return d.df > 2 ? d.df / (d.df - 2) : std::numeric_limits<double>::infinity();
        else if constexpr (std::is_same_v<T, Gumbel>)
          return std::numbers::pi * std::numbers::pi * d.scale * d.scale / 6.0;
        else if constexpr (std::is_same_v<T, Poisson>) return d.rate;
        else if constexpr (std::is_same_v<T, Uniform>) return (d.hi - d.lo) * (d.hi - d.lo) / 12.0;
        else return d.prob * (1 - d.prob);
      },
      family_);
}

double Distribution::snr() const {
  const double m = mean();
  return m == 0.0 ? 0.0 : m / std::sqrt(variance());
}

void Distribution::fill(MatrixX<double>& out, rng::Engine& engine) const {
  auto fill_with = [&](auto&& dist) {
    for (Index k = 0; k < out.size(); ++k) out.data()[k] = static_cast<double>(dist(engine));
  };
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Normal>) fill_with(std::normal_distribution<double>(d.mean, d.sd));
        else if constexpr (std::is_same_v<T, Gamma>) fill_with(std::gamma_distribution<double>(d.shape, d.scale));
        else if constexpr (std::is_same_v<T, LogNormal>) fill_with(std::lognormal_distribution<double>(d.log_mean, d.log_sd));
        else if constexpr (std::is_same_v<T, StudentT>) fill_with(std::student_t_distribution<double>(d.df));
        else if constexpr (std::is_same_v<T, Gumbel>) fill_with(std::extreme_value_distribution<double>(d.location, d.scale));
        else if constexpr (std::is_same_v<T, Poisson>) fill_with(std::poisson_distribution<long long>(d.rate));
        else if constexpr (std::is_same_v<T, Uniform>) fill_with(std::uniform_real_distribution<double>(d.lo, d.hi));
        else fill_with(std::bernoulli_distribution(d.prob));
      },
      family_);
}

std::string Distribution::to_string() const {
  return std::visit(
      [](const auto& d) -> std::string {
        using T = std::decay_t<decltype(d)>;
        const auto f = format_double;
        if constexpr (std::is_same_v<T, Normal>) return "normal(" + f(d.mean) + "," + f(d.sd) + ")";
        else if constexpr (std::is_same_v<T, Gamma>) return "gamma(" + f(d.shape) + "," + f(d.scale) + ")";
        else if constexpr (std::is_same_v<T, LogNormal>) return "lognormal(" + f(d.log_mean) + "," + f(d.log_sd) + ")";
        else if constexpr (std::is_same_v<T, StudentT>) return "t(" + f(d.df) + ")";
        else if constexpr (std::is_same_v<T, Gumbel>) return "gumbel(" + f(d.location) + "," + f(d.scale) + ")";
        else if constexpr (std::is_same_v<T, Poisson>) return "poisson(" + f(d.rate) + ")";
        else if constexpr (std::is_same_v<T, Uniform>) return "uniform(" + f(d.lo) + "," + f(d.hi) + ")";
        else return "bernoulli(" + f(d.prob) + ")";
      },
      family_);
}

bool operator==(const Distribution& a, const Distribution& b) { return a.to_string() == b.to_string(); }

// ---------------------------------------------------------------------------
// Generator specs

void validate(const GeneratorSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ChenLinearMap>) {
          require(s.gamma.rows() >= 1, "linear map needs at least one row");
          require(s.gamma.rows() <= s.gamma.cols(),
                  "linear map needs p <= m, got p = " + std::to_string(s.gamma.rows()) +
                      ", m = " + std::to_string(s.gamma.cols()));
          require(s.gamma.allFinite(), "linear map has non-finite entries");
        } else if constexpr (std::is_same_v<T, BlockDiagonal>) {
          require(s.q >= 1, "block-diagonal model needs q >= 1");
          require(s.rho >= 0.0 && s.rho < 1.0, "block-diagonal model needs 0 <= rho < 1");
        } else if constexpr (std::is_same_v<T, MovingAverage>) {
          require(s.order == 2 || s.order == 3, "moving-average order must be 2 or 3");
          require(s.p >= 1, "moving-average model needs p >= 1");
        } else {
          require(s.p >= 9, "sparse model needs p >= 9, got " + std::to_string(s.p));
        }
      },
      spec);
}

Index dimension(const GeneratorSpec& spec) {
  return std::visit(
      [](const auto& s) -> Index {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ChenLinearMap>) return s.gamma.rows();
        else if constexpr (std::is_same_v<T, BlockDiagonal>) return 4 * s.q;
        else return s.p;
      },
      spec);
}

namespace {

MatrixX<double> moving_average_weights(int order, Index p) {
  MatrixX<double> w = MatrixX<double>::Zero(p, p + order - 1);
  for (Index j = 0; j < p; ++j) {
    w(j, j) = 1.0;
    w(j, j + 1) = 2.0;
    if (order == 3) w(j, j + 2) = 1.0;
  }
  return w;
}

}  // namespace

std::optional<SymmetricMatrixd> population_covariance(const GeneratorSpec& spec) {
  validate(spec);
  return std::visit(
      [](const auto& s) -> std::optional<SymmetricMatrixd> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ChenLinearMap>) {
          const double v = s.z.variance();
          if (!std::isfinite(v)) return std::nullopt;
          return SymmetricMatrixd::from_lower(v * s.gamma * s.gamma.transpose());
        } else if constexpr (std::is_same_v<T, BlockDiagonal>) {
          MatrixX<double> sigma = MatrixX<double>::Zero(4 * s.q, 4 * s.q);
          for (Index b = 0; b < 4; ++b) {
            const double v = s.block_dists[b].variance();
            if (!std::isfinite(v)) return std::nullopt;
            sigma.block(b * s.q, b * s.q, s.q, s.q) =
                SymmetricMatrixd::compound_symmetric(s.q, v, s.rho).dense();
          }
          return SymmetricMatrixd::from_lower(std::move(sigma));
        } else if constexpr (std::is_same_v<T, MovingAverage>) {
          const double v = s.z.variance();
          if (!std::isfinite(v)) return std::nullopt;
          const MatrixX<double> w = moving_average_weights(s.order, s.p);
          return SymmetricMatrixd::from_lower(v * w * w.transpose());
        } else {
          const double v = s.u.variance();
          if (!std::isfinite(v)) return std::nullopt;
          const SparsePair pair = sparse_cai_pair(s.p, s.structure_seed, s.delta_seed);
          return v * (s.alternative ? pair.alt_sigma : pair.null_sigma);
        }
      },
      spec);
}

DataMatrixd generate(const GeneratorSpec& spec, Index n, std::uint64_t seed) {
  validate(spec);
  require(n >= 1, "generate needs n >= 1");
  rng::Engine engine = rng::make_engine(seed, {0x67656eULL});
  return std::visit(
      [&](const auto& s) -> DataMatrixd {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ChenLinearMap>) {
          MatrixX<double> z(n, s.gamma.cols());
          s.z.fill(z, engine);
          return DataMatrixd(z * s.gamma.transpose());
        } else if constexpr (std::is_same_v<T, BlockDiagonal>) {
          const MatrixX<double> l =
              lower_cholesky(SymmetricMatrixd::compound_symmetric(s.q, 1.0, s.rho), "(1-rho)I + rho J");
          MatrixX<double> x(n, 4 * s.q);
          MatrixX<double> u(n, s.q);
          for (Index b = 0; b < 4; ++b) {
            s.block_dists[b].fill(u, engine);
            x.middleCols(b * s.q, s.q).noalias() = u * l.transpose();
          }
          return DataMatrixd(std::move(x));
        } else if constexpr (std::is_same_v<T, MovingAverage>) {
          MatrixX<double> z(n, s.p + s.order - 1);
          s.z.fill(z, engine);
          MatrixX<double> x = z.leftCols(s.p) + 2.0 * z.middleCols(1, s.p);
          if (s.order == 3) x += z.middleCols(2, s.p);
          return DataMatrixd(std::move(x));
        } else {
          const SparsePair pair = sparse_cai_pair(s.p, s.structure_seed, s.delta_seed);
          const MatrixX<double> g =
              lower_cholesky(s.alternative ? pair.alt_sigma : pair.null_sigma, "sparse covariance");
          MatrixX<double> u(n, s.p);
          s.u.fill(u, engine);
          return DataMatrixd(u * g.transpose());
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// Covariance structures

CovarianceModel sigma_alternative_diag(Index p, double lambda, double sigma0_sq, double sigma1_sq) {
  require(p >= 1, "alternative needs p >= 1");
  require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0, 1)");
  require(sigma0_sq > 0.0 && sigma1_sq >= 0.0, "need sigma0^2 > 0 and sigma1^2 >= 0");
  // Guard floor() against products like 0.29 * 100 = 28.999999999999996.
  const auto k = static_cast<Index>(std::floor(lambda * static_cast<double>(p) + 1e-9));
  CovarianceModel model{SymmetricMatrixd::identity(p), MatrixX<double>::Zero(p, p), {}};
  VectorX<double> diag = VectorX<double>::Constant(p, sigma0_sq);
  diag.head(k).array() += sigma1_sq;
  model.sigma = SymmetricMatrixd::from_lower(MatrixX<double>(diag.asDiagonal()));
  model.gamma = diag.cwiseSqrt().asDiagonal();
  if (k == 0) {
    model.warnings.push_back("floor(lambda * p) = 0: the alternative collapses to the null");
  }
  return model;
}

CovarianceModel sigma_alternative_cs(Index p, double rho, double sigma0_sq, double sigma1_sq) {
  require(p >= 1, "alternative needs p >= 1");
  require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  require(sigma0_sq > 0.0 && sigma1_sq >= 0.0, "need sigma0^2 > 0 and sigma1^2 >= 0");
  MatrixX<double> sigma = MatrixX<double>::Constant(p, p, rho * sigma1_sq);
  sigma.diagonal().array() += (1.0 - rho) * sigma0_sq;
  MatrixX<double> gamma = MatrixX<double>::Zero(p, p + 1);
  gamma.leftCols(p).diagonal().setConstant(std::sqrt((1.0 - rho) * sigma0_sq));
  gamma.col(p).setConstant(std::sqrt(rho * sigma1_sq));
  return {SymmetricMatrixd::from_lower(std::move(sigma)), std::move(gamma), {}};
}

SparseStructure sparse_structure(Index p, std::uint64_t structure_seed) {
  require(p >= 9, "sparse model needs p >= 9, got " + std::to_string(p));
  rng::Engine engine = rng::make_engine(structure_seed, {0x73746172ULL});
  MatrixX<double> star = MatrixX<double>::Identity(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = j + 1; i < p; ++i)
      star(i, j) = rng::uniform_below(engine, 20) == 0 ? 0.5 : 0.0;  // 0.5 * Bernoulli(0.05)
  SparseStructure s{SymmetricMatrixd::from_lower(std::move(star)), 0.0, SymmetricMatrixd::identity(p)};
  s.delta0 = std::abs(min_eigenvalue(s.sigma_star)) + 0.05;
  s.normalized = (1.0 / (1.0 + s.delta0)) * (s.sigma_star + s.delta0 * SymmetricMatrixd::identity(p));
  return s;
}

SymmetricMatrixd sparse_delta(Index p, std::uint64_t delta_seed) {
  require(p >= 9, "sparse model needs p >= 9, got " + std::to_string(p));
  rng::Engine engine = rng::make_engine(delta_seed, {0x64656c74ULL});
  const auto slots = static_cast<std::uint64_t>(p * (p - 1) / 2);
  // Partial Fisher-Yates: the first 16 entries become a uniform 16-subset.
  std::vector<std::uint64_t> index(slots);
  std::iota(index.begin(), index.end(), std::uint64_t{0});
  for (std::uint64_t k = 0; k < 16; ++k) {
    std::swap(index[k], index[k + rng::uniform_below(engine, slots - k)]);
  }
  MatrixX<double> delta = MatrixX<double>::Zero(p, p);
  for (std::uint64_t k = 0; k < 16; ++k) {
    // Strictly-lower slots in column-major order.
    std::uint64_t slot = index[k];
    Index j = 0;
    while (slot >= static_cast<std::uint64_t>(p - j - 1)) {
      slot -= static_cast<std::uint64_t>(p - j - 1);
      ++j;
    }
    delta(j + 1 + static_cast<Index>(slot), j) = 0.9;
  }
  return SymmetricMatrixd::from_lower(std::move(delta));
}

SparsePair sparse_cai_pair(const SparseStructure& structure, std::uint64_t delta_seed) {
  const Index p = structure.sigma_star.dim();
  const SymmetricMatrixd delta = sparse_delta(p, delta_seed);
  const SymmetricMatrixd with_delta = structure.normalized + delta;
  const double delta1 =
      std::abs(std::min(min_eigenvalue(structure.normalized), min_eigenvalue(with_delta))) + 0.05;
  const SymmetricMatrixd shift = delta1 * SymmetricMatrixd::identity(p);
  SparsePair pair{structure.normalized + shift, with_delta + shift, delta, structure.delta0, delta1};
  lower_cholesky(pair.null_sigma, "sparse null covariance");
  lower_cholesky(pair.alt_sigma, "sparse alternative covariance");
  return pair;
}

SparsePair sparse_cai_pair(Index p, std::uint64_t structure_seed, std::uint64_t delta_seed) {
  return sparse_cai_pair(sparse_structure(p, structure_seed), delta_seed);
}

double ssnr(std::span<const double> sample) {
  require(sample.size() >= 2, "SSNR needs at least 2 values");
  const Eigen::Map<const VectorX<double>> v(sample.data(), static_cast<Index>(sample.size()));
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
  require(sd > 0.0, "SSNR is undefined for a sample with zero standard deviation");
  return mean / sd;
}

// ---------------------------------------------------------------------------
// Key-value configuration

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = lower(trim(std::string_view(t).substr(0, eq)));
    if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
    for (const auto& kv : out)
      if (kv.first == key) throw InputError("config key '" + key + "' given twice");
    out.emplace_back(std::move(key), trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

namespace {

class KeyValues {
 public:
  explicit KeyValues(const std::vector<std::pair<std::string, std::string>>& kv)
      : map_(kv.begin(), kv.end()) {}

  bool has(const std::string& key) const { return map_.count(key) != 0; }

  std::string text(const std::string& key) {
    const auto it = map_.find(key);
    if (it == map_.end()) throw InputError("config is missing key '" + key + "'");
    used_.push_back(key);
    return it->second;
  }
  double number(const std::string& key) { return parse_number(text(key)); }
  Index integer(const std::string& key) {
    const double v = number(key);
    require(v == std::floor(v), "config key '" + key + "' must be an integer");
    return static_cast<Index>(v);
  }
  std::uint64_t seed(const std::string& key) {
    const std::string t = text(key);
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    require(res.ec == std::errc() && res.ptr == t.data() + t.size(),
            "config key '" + key + "' must be an unsigned integer");
    return v;
  }

  void reject_unused() const {
    for (const auto& [key, value] : map_) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        throw InputError("unknown config key '" + key + "'");
      }
    }
  }

 private:
  std::map<std::string, std::string> map_;
  std::vector<std::string> used_;
};

}  // namespace

std::string to_config(const GeneratorSpec& spec) {
  std::ostringstream out;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ChenLinearMap>) {
          out << "model = chen\n"
              << "gamma_rows = " << s.gamma.rows() << "\n"
              << "gamma_cols = " << s.gamma.cols() << "\n"
              << "gamma = ";
          for (Index i = 0; i < s.gamma.rows(); ++i)
            for (Index j = 0; j < s.gamma.cols(); ++j)
              out << (i + j == 0 ? "" : ",") << format_double(s.gamma(i, j));
          out << "\ndistribution = " << s.z.to_string() << "\n";
        } else if constexpr (std::is_same_v<T, BlockDiagonal>) {
          out << "model = block-diagonal\n"
              << "q = " << s.q << "\n"
              << "rho = " << format_double(s.rho) << "\n"
              << "distributions = ";
          for (std::size_t b = 0; b < 4; ++b) out << (b ? "; " : "") << s.block_dists[b].to_string();
          out << "\n";
        } else if constexpr (std::is_same_v<T, MovingAverage>) {
          out << "model = moving-average\n"
              << "order = " << s.order << "\n"
              << "p = " << s.p << "\n"
              << "distribution = " << s.z.to_string() << "\n";
        } else {
          out << "model = sparse-cai\n"
              << "p = " << s.p << "\n"
              << "structure_seed = " << s.structure_seed << "\n"
              << "delta_seed = " << s.delta_seed << "\n"
              << "distribution = " << s.u.to_string() << "\n"
              << "alternative = " << (s.alternative ? "true" : "false") << "\n";
        }
      },
      spec);
  return out.str();
}

namespace {

GeneratorSpec chen_from(KeyValues& kv) {
  const Distribution z = Distribution::parse(kv.text("distribution"));
  if (kv.has("gamma")) {
    const Index rows = kv.integer("gamma_rows");
    const Index cols = kv.integer("gamma_cols");
    const auto entries = split_top_level(kv.text("gamma"), ',');
    require(rows >= 1 && cols >= 1 && static_cast<Index>(entries.size()) == rows * cols,
            "gamma needs gamma_rows * gamma_cols entries");
    MatrixX<double> gamma(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) gamma(i, j) = parse_number(entries[i * cols + j]);
    return ChenLinearMap{std::move(gamma), z};
  }
  const std::string structure = lower(kv.text("structure"));
  const Index p = kv.integer("p");
  if (structure == "identity") {
    require(p >= 1, "p must be >= 1");
    return ChenLinearMap{MatrixX<double>::Identity(p, p), z};
  }
  if (structure == "alt-diag") {
    return ChenLinearMap{sigma_alternative_diag(p, kv.number("lambda"), kv.number("sigma0_sq"),
                                                kv.number("sigma1_sq"))
                             .gamma,
                         z};
  }
  if (structure == "alt-cs") {
    return ChenLinearMap{sigma_alternative_cs(p, kv.number("rho"), kv.number("sigma0_sq"),
                                              kv.number("sigma1_sq"))
                             .gamma,
                         z};
  }
  throw InputError("unknown chen structure '" + structure + "'");
}

}  // namespace

GeneratorSpec from_config(std::string_view text) {
  KeyValues kv(parse_key_values(text));
  const std::string model = lower(kv.text("model"));
  GeneratorSpec spec;
  if (model == "chen") {
    spec = chen_from(kv);
  } else if (model == "block-diagonal") {
    BlockDiagonal s;
    s.q = kv.integer("q");
    s.rho = kv.number("rho");
    if (kv.has("distributions")) {
      const auto parts = split_top_level(kv.text("distributions"), ';');
      require(parts.size() == 4, "block-diagonal model needs exactly 4 distributions");
      for (std::size_t b = 0; b < 4; ++b) s.block_dists[b] = Distribution::parse(parts[b]);
    } else {
      s.block_dists.fill(Distribution::parse(kv.text("distribution")));
    }
    spec = s;
  } else if (model == "moving-average") {
    spec = MovingAverage{static_cast<int>(kv.integer("order")), kv.integer("p"),
                         Distribution::parse(kv.text("distribution"))};
  } else if (model == "sparse-cai") {
    SparseCai s;
    s.p = kv.integer("p");
    s.structure_seed = kv.seed("structure_seed");
    s.delta_seed = kv.seed("delta_seed");
    s.u = Distribution::parse(kv.text("distribution"));
    if (kv.has("alternative")) {
      const std::string alt = lower(kv.text("alternative"));
      require(alt == "true" || alt == "false", "alternative must be true or false");
      s.alternative = alt == "true";
    }
    spec = s;
  } else {
    throw InputError("unknown model '" + model + "'");
  }
  kv.reject_unused();
  validate(spec);
  return spec;
}

}  // namespace covtest::datagen
