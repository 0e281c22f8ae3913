#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cfmimo {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Antennas x subcarriers grid for one OFDM symbol. Row-major so that the
/// samples of one antenna are contiguous for the FFT.
using SymbolGrid =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One coherence block worth of OFDM symbols for a single AP.
struct Frame {
  std::vector<SymbolGrid> symbols;

  Frame() = default;
  Frame(int antennas, int subcarriers, int num_symbols)
      : symbols(static_cast<std::size_t>(num_symbols),
                SymbolGrid::Zero(antennas, subcarriers)) {}

  int num_symbols() const { return static_cast<int>(symbols.size()); }
  int antennas() const { return symbols.empty() ? 0 : int(symbols[0].rows()); }
  int subcarriers() const {
    return symbols.empty() ? 0 : int(symbols[0].cols());
  }
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Singular or ill-conditioned matrix in a precoder/projector.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Broken sequential fronthaul chain (missing predecessor message).
class ChainError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfmimo
