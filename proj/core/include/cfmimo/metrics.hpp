#pragma once

#include <string>
#include <vector>

#include "cfmimo/types.hpp"

namespace cfmimo {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct SinrBreakdown {
  double cp = 0.0;         // |E{g_kk}|
  double pu = 0.0;         // Var{g_kk}
  std::vector<double> ui;  // E{|g_kt|^2}, zero at t = k
  double hwi = 0.0;        // E{|sum_l h_lk^H D_l|^2}
  double noise = 1.0;
  double sinr = 0.0;

  double ui_total() const;
};

/// Collects the Monte-Carlo samples behind the SINR terms of one resource
/// block. Effective gains g_kt = sum_l rho_l sqrt(eta_lt) h_lk^H w_lt arrive
/// as K x K matrices (one per realization and OFDM symbol); distortion
/// arrives as received distortion samples per user.
class SinrAccumulator {
 public:
  explicit SinrAccumulator(int num_users);

  void add_gain(const CMatrix& g);
  /// Received distortion sum_l h_lk^H D_l at one data tone, all users.
  void add_distortion(const CVector& received);

  int num_users() const { return k_; }
  std::size_t gain_samples() const { return n_gain_; }
  std::size_t distortion_samples() const { return n_dist_; }

  SinrBreakdown breakdown(int k) const;

 private:
  int k_;
  std::size_t n_gain_ = 0;
  std::size_t n_dist_ = 0;
  std::vector<CompensatedSum> cp_re_, cp_im_, cp_abs2_;
  std::vector<CompensatedSum> g_abs2_;  // K*K, |g_kt|^2
  std::vector<CompensatedSum> hwi_;
};

/// Composite |cp|^2 / (pu + sum ui + hwi + noise).
double sinr_from_terms(const SinrBreakdown& b);

double spectral_efficiency(double sinr, double prelog);

enum class ComplexityConvention { kTable, kPerSymbol };

std::string to_string(ComplexityConvention c);
ComplexityConvention parse_complexity_convention(const std::string& s);

struct ComplexityParams {
  int M = 8;
  int K = 7;
  int tau_s = 4;
  int active = 508;
  int symbols = 14;
  int tr_iterations = 15;
  int papr_iterations = 5;
};

struct ComplexityReport {
  std::string method;
  ComplexityConvention convention = ComplexityConvention::kPerSymbol;
  double multiplications = 0.0;
  ComplexityParams params;
};

/// Complex multiplications per channel realization. `kTable` evaluates the
/// closed forms as printed; `kPerSymbol` also charges the PAPR-aware
/// iterations and the HW-aware per-tone projection for every OFDM symbol.
/// Methods: pzf, tr, papr_aware, hw_aware.
ComplexityReport complexity_count(const std::string& method,
                                  const ComplexityParams& p,
                                  ComplexityConvention conv = ComplexityConvention::kPerSymbol);

}  // namespace cfmimo
