#pragma once

// Symmetric-matrix primitives: half-vectorization, sample covariance and
// correlation estimators, and the generalized cosine between two symmetric
// matrices under a choice of mapping.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "covtest/errors.hpp"

namespace covtest {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Which image of a symmetric matrix the generalized cosine is taken over.
enum class MatrixMapping {
  Frobenius,         ///< the matrix itself, trace inner product
  CholeskyVech,      ///< vech of the lower Cholesky factor
  EigenvalueVector,  ///< eigenvalues sorted descending
  HalfVec,           ///< vech: lower triangle including the diagonal
  ModifiedHalfVec,   ///< vech*: strictly lower triangle
};

enum class CorrelationMethod { Pearson, Spearman, Kendall };

/// Covariance-type or correlation-type matrix input to a statistic.
enum class MatrixKind { Covariance, Correlation };

std::string_view to_string(MatrixMapping mapping);
std::string_view to_string(CorrelationMethod method);
std::string_view to_string(MatrixKind kind);
CorrelationMethod parse_correlation_method(std::string_view name);
MatrixKind parse_matrix_kind(std::string_view name);

/// A p x p real symmetric matrix with finite entries.
///
/// The lower triangle is the single source of truth: every constructor
/// mirrors it into the upper triangle, so entry(i,j) == entry(j,i) holds
/// bit-for-bit.
template <typename Scalar>
class SymmetricMatrix {
 public:
  using Dense = MatrixX<Scalar>;

  /// Builds from the lower triangle of `m`; the upper triangle is ignored.
  static SymmetricMatrix from_lower(Dense m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw InputError("symmetric matrix must be square with dimension >= 1, got " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = j; i < m.rows(); ++i) {
        if (!std::isfinite(static_cast<double>(m(i, j)))) {
          throw InputError("symmetric matrix has a non-finite entry at (" + std::to_string(i) +
                           "," + std::to_string(j) + ")");
        }
        m(j, i) = m(i, j);
      }
    }
    return SymmetricMatrix(std::move(m));
  }

  /// Builds from a full matrix, rejecting asymmetry larger than `tolerance`.
  static SymmetricMatrix from_dense(const Dense& m, Scalar tolerance = Scalar(0)) {
    if (m.rows() == m.cols()) {
      for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = j + 1; i < m.rows(); ++i) {
          if (std::abs(m(i, j) - m(j, i)) > tolerance) {
            throw InputError("matrix is not symmetric at (" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
          }
        }
      }
    }
    return from_lower(m);
  }

  static SymmetricMatrix identity(Index p) { return SymmetricMatrix(Dense::Identity(p, p)); }
  static SymmetricMatrix ones(Index p) { return SymmetricMatrix(Dense::Ones(p, p)); }

  /// sigma2 * [(1 - rho) I + rho J]
  static SymmetricMatrix compound_symmetric(Index p, Scalar sigma2, Scalar rho) {
    Dense m = Dense::Constant(p, p, sigma2 * rho);
    m.diagonal().setConstant(sigma2);
    return SymmetricMatrix(std::move(m));
  }

  Index dim() const noexcept { return m_.rows(); }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }
  const Dense& dense() const noexcept { return m_; }
  Scalar trace() const { return m_.trace(); }

  friend SymmetricMatrix operator*(Scalar c, const SymmetricMatrix& s) {
    return SymmetricMatrix(Dense(c * s.m_));
  }
  friend SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    if (a.dim() != b.dim()) throw InputError("dimension mismatch in symmetric sum");
    return SymmetricMatrix(Dense(a.m_ + b.m_));
  }

  /// Simultaneous relabeling P S P^T, where perm[k] is the source index of row k.
  SymmetricMatrix permuted(const std::vector<Index>& perm) const {
    Dense out(dim(), dim());
    for (Index j = 0; j < dim(); ++j)
      for (Index i = 0; i < dim(); ++i) out(i, j) = m_(perm[i], perm[j]);
    return SymmetricMatrix(std::move(out));
  }

 private:
  explicit SymmetricMatrix(Dense m) : m_(std::move(m)) {}
  Dense m_;
};

/// n x p observation matrix, rows are subjects, all cells finite.
template <typename Scalar>
class DataMatrix {
 public:
  using Dense = MatrixX<Scalar>;

  explicit DataMatrix(Dense values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw InputError("data matrix must have at least one row and one column");
    }
    for (Index j = 0; j < values_.cols(); ++j)
      for (Index i = 0; i < values_.rows(); ++i)
        if (!std::isfinite(static_cast<double>(values_(i, j)))) {
          throw InputError("data matrix cell (" + std::to_string(i) + "," + std::to_string(j) +
                           ") is not finite");
        }
  }

  Index n() const noexcept { return values_.rows(); }
  Index p() const noexcept { return values_.cols(); }
  const Dense& values() const noexcept { return values_; }

 private:
  Dense values_;
};

using SymmetricMatrixd = SymmetricMatrix<double>;
using DataMatrixd = DataMatrix<double>;

// ---------------------------------------------------------------------------
// Vectorization

/// Lower triangle including the diagonal, column-major, of any square matrix.
template <typename Derived>
VectorX<typename Derived::Scalar> vech_lower(const Eigen::MatrixBase<Derived>& m) {
  const Index p = m.rows();
  VectorX<typename Derived::Scalar> out(p * (p + 1) / 2);
  Index k = 0;
  for (Index j = 0; j < p; ++j) {
    out.segment(k, p - j) = m.col(j).tail(p - j);
    k += p - j;
  }
  return out;
}

template <typename Scalar>
VectorX<Scalar> vech(const SymmetricMatrix<Scalar>& m) {
  return vech_lower(m.dense());
}

/// Strictly-lower triangle, column-major. Requires p >= 2.
template <typename Scalar>
VectorX<Scalar> vech_star(const SymmetricMatrix<Scalar>& m) {
  const Index p = m.dim();
  if (p < 2) throw InputError("vech* needs p >= 2, got p = " + std::to_string(p));
  VectorX<Scalar> out(p * (p - 1) / 2);
  Index k = 0;
  for (Index j = 0; j + 1 < p; ++j) {
    out.segment(k, p - j - 1) = m.dense().col(j).tail(p - j - 1);
    k += p - j - 1;
  }
  return out;
}

/// Inverse of vech.
template <typename Scalar>
SymmetricMatrix<Scalar> unvech(const VectorX<Scalar>& v) {
  const double root = (std::sqrt(8.0 * static_cast<double>(v.size()) + 1.0) - 1.0) / 2.0;
  const Index p = static_cast<Index>(std::llround(root));
  if (p < 1 || p * (p + 1) / 2 != v.size()) {
    throw InputError("vector length " + std::to_string(v.size()) + " is not triangular");
  }
  MatrixX<Scalar> m = MatrixX<Scalar>::Zero(p, p);
  Index k = 0;
  for (Index j = 0; j < p; ++j) {
    m.col(j).tail(p - j) = v.segment(k, p - j);
    k += p - j;
  }
  return SymmetricMatrix<Scalar>::from_lower(std::move(m));
}

// ---------------------------------------------------------------------------
// Estimators

/// Unbiased sample covariance (divisor n - 1) of the rows of `data`.
template <typename Derived>
SymmetricMatrix<typename Derived::Scalar> sample_covariance(
    const Eigen::MatrixBase<Derived>& data) {
  using Scalar = typename Derived::Scalar;
  const Index n = data.rows();
  if (n < 2) {
    throw InputError("covariance needs at least 2 rows, got " + std::to_string(n));
  }
  const MatrixX<Scalar> centered = data.rowwise() - data.colwise().mean();
  MatrixX<Scalar> cov = MatrixX<Scalar>::Zero(data.cols(), data.cols());
  cov.template selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                                          Scalar(1) / Scalar(n - 1));
  return SymmetricMatrix<Scalar>::from_lower(std::move(cov));
}

template <typename Scalar>
SymmetricMatrix<Scalar> sample_covariance(const DataMatrix<Scalar>& data) {
  return sample_covariance(data.values());
}

namespace detail {

template <typename Derived>
void require_two_distinct_values(const Eigen::MatrixBase<Derived>& data) {
  for (Index j = 0; j < data.cols(); ++j) {
    if (data.col(j).minCoeff() == data.col(j).maxCoeff()) {
      throw DegenerateColumnError(static_cast<std::size_t>(j),
                                  "column " + std::to_string(j) +
                                      " is constant; its correlation is undefined");
    }
  }
}

/// Scales a covariance matrix to unit diagonal, clamping into [-1, 1].
template <typename Scalar>
SymmetricMatrix<Scalar> covariance_to_correlation(const SymmetricMatrix<Scalar>& cov) {
  const VectorX<Scalar> inv_sd = cov.dense().diagonal().cwiseSqrt().cwiseInverse();
  MatrixX<Scalar> r = inv_sd.asDiagonal() * cov.dense() * inv_sd.asDiagonal();
  r = r.cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
  r.diagonal().setOnes();
  return SymmetricMatrix<Scalar>::from_lower(std::move(r));
}

/// Average ranks (1-based); tied values share the mean of their positions.
template <typename Derived>
VectorX<typename Derived::Scalar> average_ranks(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return x(a) < x(b); });
  VectorX<Scalar> ranks(n);
  Index start = 0;
  while (start < n) {
    Index end = start + 1;
    while (end < n && x(order[end]) == x(order[start])) ++end;
    const Scalar mean_rank = Scalar(start + end + 1) / Scalar(2);
    for (Index k = start; k < end; ++k) ranks(order[k]) = mean_rank;
    start = end;
  }
  return ranks;
}

/// Number of tied pairs sum t(t-1)/2 over runs of equal values in a sorted range.
template <typename Equal>
long long tied_pairs(Index n, Equal&& equal_to_previous) {
  long long total = 0;
  long long run = 1;
  for (Index k = 1; k < n; ++k) {
    if (equal_to_previous(k)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

/// Counts inversions of `v` while merge-sorting it in place.
template <typename Scalar>
long long merge_sort_swaps(std::vector<Scalar>& v, std::vector<Scalar>& buffer, std::size_t lo,
                           std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long swaps = merge_sort_swaps(v, buffer, lo, mid) + merge_sort_swaps(v, buffer, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<long long>(mid - i);
      buffer[k++] = v[j++];
    } else {
      buffer[k++] = v[i++];
    }
  }
  while (i < mid) buffer[k++] = v[i++];
  while (j < hi) buffer[k++] = v[j++];
  std::copy(buffer.begin() + lo, buffer.begin() + hi, v.begin() + lo);
  return swaps;
}

/// Kendall tau-b in O(n log n) (Knight's algorithm).
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar kendall_tau_b(const Eigen::MatrixBase<DerivedX>& x,
                                        const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  const Index n = x.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return x(a) < x(b) || (x(a) == x(b) && y(a) < y(b));
  });

  const long long total_pairs = static_cast<long long>(n) * (n - 1) / 2;
  const long long ties_x =
      tied_pairs(n, [&](Index k) { return x(order[k]) == x(order[k - 1]); });
  const long long ties_xy = tied_pairs(n, [&](Index k) {
    return x(order[k]) == x(order[k - 1]) && y(order[k]) == y(order[k - 1]);
  });

  std::vector<Scalar> ys(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) ys[k] = y(order[k]);
  std::vector<Scalar> buffer(ys.size());
  const long long discordant = merge_sort_swaps(ys, buffer, 0, ys.size());
  const long long ties_y = tied_pairs(n, [&](Index k) { return ys[k] == ys[k - 1]; });

  const long long numerator = total_pairs - ties_x - ties_y + ties_xy - 2 * discordant;
  const Scalar denominator = std::sqrt(static_cast<Scalar>(total_pairs - ties_x) *
                                       static_cast<Scalar>(total_pairs - ties_y));
  return static_cast<Scalar>(numerator) / denominator;
}

}  // namespace detail

/// Pearson, Spearman (Pearson on average ranks) or Kendall tau-b correlation.
template <typename Derived>
SymmetricMatrix<typename Derived::Scalar> sample_correlation(
    const Eigen::MatrixBase<Derived>& data, CorrelationMethod method) {
  using Scalar = typename Derived::Scalar;
  if (data.rows() < 2) {
    throw InputError("correlation needs at least 2 rows, got " + std::to_string(data.rows()));
  }
  detail::require_two_distinct_values(data);
  switch (method) {
    case CorrelationMethod::Pearson:
      return detail::covariance_to_correlation(sample_covariance(data));
    case CorrelationMethod::Spearman: {
      MatrixX<Scalar> ranks(data.rows(), data.cols());
      for (Index j = 0; j < data.cols(); ++j) ranks.col(j) = detail::average_ranks(data.col(j));
      return detail::covariance_to_correlation(sample_covariance(ranks));
    }
    case CorrelationMethod::Kendall: {
      const Index p = data.cols();
      MatrixX<Scalar> tau = MatrixX<Scalar>::Identity(p, p);
      for (Index j = 0; j < p; ++j)
        for (Index i = j + 1; i < p; ++i)
          tau(i, j) = std::clamp(detail::kendall_tau_b(data.col(i), data.col(j)), Scalar(-1),
                                 Scalar(1));
      return SymmetricMatrix<Scalar>::from_lower(std::move(tau));
    }
  }
  throw InternalError("unknown correlation method");
}

template <typename Scalar>
SymmetricMatrix<Scalar> sample_correlation(const DataMatrix<Scalar>& data,
                                           CorrelationMethod method) {
  return sample_correlation(data.values(), method);
}

/// Covariance or correlation of `data`, whichever `kind` names.
template <typename Derived>
SymmetricMatrix<typename Derived::Scalar> sample_matrix(const Eigen::MatrixBase<Derived>& data,
                                                        MatrixKind kind,
                                                        CorrelationMethod method) {
  return kind == MatrixKind::Covariance ? sample_covariance(data)
                                        : sample_correlation(data, method);
}

// ---------------------------------------------------------------------------
// Mappings and the generalized cosine

/// Lower Cholesky factor. Fails when a pivot drops below 1e-10 x max diagonal.
template <typename Scalar>
MatrixX<Scalar> cholesky_factor(const SymmetricMatrix<Scalar>& m) {
  const Index p = m.dim();
  const Scalar max_diag = m.dense().diagonal().maxCoeff();
  const Scalar floor = Scalar(1e-10) * std::max(max_diag, Scalar(0));
  MatrixX<Scalar> l = MatrixX<Scalar>::Zero(p, p);
  Scalar smallest = std::numeric_limits<Scalar>::infinity();
  for (Index j = 0; j < p; ++j) {
    const Scalar pivot = m(j, j) - l.row(j).head(j).squaredNorm();
    smallest = std::min(smallest, pivot);
    if (!(pivot > floor)) {
      throw NotPositiveDefiniteError(static_cast<double>(pivot),
                                     "matrix is not positive definite: pivot " +
                                         std::to_string(static_cast<double>(pivot)) +
                                         " at index " + std::to_string(j));
    }
    l(j, j) = std::sqrt(pivot);
    for (Index i = j + 1; i < p; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return l;
}

/// Eigenvalues sorted descending.
template <typename Scalar>
VectorX<Scalar> eigenvalues_descending(const SymmetricMatrix<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(m.dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InternalError("eigenvalue solver did not converge");
  return solver.eigenvalues().reverse();
}

/// Euclidean cosine clamped into [-1, 1]; zero vectors are an error.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a,
                                 const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) {
    throw DegenerateStatisticError("cosine is undefined for a zero image vector");
  }
  return std::clamp(a.dot(b) / (na * nb), Scalar(-1), Scalar(1));
}

template <typename Scalar>
VectorX<Scalar> map_matrix(const SymmetricMatrix<Scalar>& m, MatrixMapping mapping) {
  switch (mapping) {
    case MatrixMapping::Frobenius:
      return m.dense().reshaped();
    case MatrixMapping::CholeskyVech:
      return vech_lower(cholesky_factor(m));
    case MatrixMapping::EigenvalueVector:
      return eigenvalues_descending(m);
    case MatrixMapping::HalfVec:
      return vech(m);
    case MatrixMapping::ModifiedHalfVec:
      return vech_star(m);
  }
  throw InternalError("unknown matrix mapping");
}

/// <f(M1), f(M2)> / (|f(M1)| |f(M2)|) for the chosen mapping f.
template <typename Scalar>
Scalar generalized_cosine(const SymmetricMatrix<Scalar>& m1, const SymmetricMatrix<Scalar>& m2,
                          MatrixMapping mapping) {
  if (m1.dim() != m2.dim()) {
    throw InputError("dimension mismatch: " + std::to_string(m1.dim()) + " vs " +
                     std::to_string(m2.dim()));
  }
  return cosine(map_matrix(m1, mapping), map_matrix(m2, mapping));
}

/// Hilbert entries 1/(i+j-1) off the diagonal (1-based), ones on it.
template <typename Scalar = double>
SymmetricMatrix<Scalar> modified_hilbert(Index p) {
  if (p < 1) throw InputError("modified Hilbert matrix needs p >= 1");
  MatrixX<Scalar> m(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i)
      m(i, j) = i == j ? Scalar(1) : Scalar(1) / Scalar(i + j + 1);
  return SymmetricMatrix<Scalar>::from_lower(std::move(m));
}

}  // namespace covtest
