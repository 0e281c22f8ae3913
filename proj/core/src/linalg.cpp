#include "cfmimo/linalg.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace cfmimo {

double hermitian_condition(const CMatrix& gram) {
  if (gram.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

CMatrix hermitian_inverse(const CMatrix& gram, const std::string& context) {
  const double cond = hermitian_condition(gram);
  if (!(cond <= kMaxCondition)) {
    throw NumericError("singular Gram matrix (condition " + std::to_string(cond) +
                       ") at " + context);
  }
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw NumericError("Cholesky factorisation failed at " + context);
  return llt.solve(CMatrix::Identity(gram.rows(), gram.cols()));
}

CMatrix zero_forcing_basis(const CMatrix& a, const std::string& context) {
  if (a.cols() == 0) return CMatrix(a.rows(), 0);
  const CMatrix gram = a.adjoint() * a;
  return a * hermitian_inverse(gram, context);
}

CMatrix select_columns(const CMatrix& a, const std::vector<int>& cols) {
  CMatrix out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = a.col(cols[j]);
  return out;
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace cfmimo
