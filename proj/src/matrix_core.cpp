#include "covtest/matrix_core.hpp"

namespace covtest {

std::string_view to_string(MatrixMapping mapping) {
  switch (mapping) {
    case MatrixMapping::Frobenius:
      return "frobenius";
    case MatrixMapping::CholeskyVech:
      return "cholesky-vech";
    case MatrixMapping::EigenvalueVector:
      return "eigenvalues";
    case MatrixMapping::HalfVec:
      return "vech";
    case MatrixMapping::ModifiedHalfVec:
      return "vech-star";
  }
  return "unknown";
}

std::string_view to_string(CorrelationMethod method) {
  switch (method) {
    case CorrelationMethod::Pearson:
      return "pearson";
    case CorrelationMethod::Spearman:
      return "spearman";
    case CorrelationMethod::Kendall:
      return "kendall";
  }
  return "unknown";
}

std::string_view to_string(MatrixKind kind) {
  return kind == MatrixKind::Covariance ? "covariance" : "correlation";
}

CorrelationMethod parse_correlation_method(std::string_view name) {
  for (auto m : {CorrelationMethod::Pearson, CorrelationMethod::Spearman, CorrelationMethod::Kendall})
    if (name == to_string(m)) return m;
  throw InputError("unknown correlation method '" + std::string(name) + "'");
}

MatrixKind parse_matrix_kind(std::string_view name) {
  if (name == "covariance") return MatrixKind::Covariance;
  if (name == "correlation") return MatrixKind::Correlation;
  throw InputError("unknown matrix kind '" + std::string(name) + "'");
}

template class SymmetricMatrix<double>;
template class DataMatrix<double>;

}  // namespace covtest
