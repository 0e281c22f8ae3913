#pragma once

#include <string>
#include <vector>

#include "cfmimo/types.hpp"

namespace cfmimo {

/// Gram matrices with a condition number above this are treated as singular.
inline constexpr double kMaxCondition = 1e12;

/// Ratio of extreme eigenvalues of a Hermitian matrix (inf if not positive
/// definite).
double hermitian_condition(const CMatrix& gram);

/// Inverse of a Hermitian positive-definite matrix. Throws NumericError with
/// `context` in the message when the matrix is singular or ill-conditioned.
CMatrix hermitian_inverse(const CMatrix& gram, const std::string& context);

/// A (A^H A)^{-1}: its j-th column is orthogonal to every column of A but the
/// j-th, with which it has unit inner product.
CMatrix zero_forcing_basis(const CMatrix& a, const std::string& context);

CMatrix select_columns(const CMatrix& a, const std::vector<int>& cols);

/// Largest absolute entry of a - b.
double max_abs_diff(const CMatrix& a, const CMatrix& b);

}  // namespace cfmimo
