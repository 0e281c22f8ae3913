#pragma once

#include <Eigen/SVD>

#include "cfmimo/config.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo::test {

// Two APs, two users, one 64-tone RB, two OFDM symbols. Runs in milliseconds.
inline SimConfig tiny_config() {
  SimConfig c;
  c.num_aps = 2;
  c.antennas = 4;
  c.num_users = 2;
  c.pilot_length = 2;
  c.total_subcarriers = 64;
  c.num_rb = 1;
  c.subcarriers_per_rb = 64;
  c.symbols_per_block = 2;
  c.channel_realizations = 3;
  c.snapshots = 2;
  c.reserved_tones = 4;
  c.tr_iterations = 3;
  c.papr_iterations = 2;
  return c;
}

inline CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = complex_gaussian(rng);
  return a;
}

// Moore-Penrose pseudo-inverse through the SVD, independent of the library's
// Cholesky-based path.
inline CMatrix pinv_oracle(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = s(i) > 1e-14 * s(0) ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * s.cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
}

// Orthogonal projector onto the complement of span(a), built from the SVD.
inline CMatrix complement_projector_oracle(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU);
  const Eigen::Index r = svd.rank();
  const CMatrix u = svd.matrixU().leftCols(r);
  return CMatrix::Identity(a.rows(), a.rows()) - u * u.adjoint();
}

}  // namespace cfmimo::test
