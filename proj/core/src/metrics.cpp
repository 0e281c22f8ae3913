#include "cfmimo/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace cfmimo {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v))
    comp_ += (sum_ - t) + v;
  else
    comp_ += (v - t) + sum_;
  sum_ = t;
}

double SinrBreakdown::ui_total() const {
  double s = 0.0;
  for (double u : ui) s += u;
  return s;
}

SinrAccumulator::SinrAccumulator(int num_users)
    : k_(num_users),
      cp_re_(static_cast<std::size_t>(num_users)),
      cp_im_(static_cast<std::size_t>(num_users)),
      cp_abs2_(static_cast<std::size_t>(num_users)),
      g_abs2_(static_cast<std::size_t>(num_users) * static_cast<std::size_t>(num_users)),
      hwi_(static_cast<std::size_t>(num_users)) {}

void SinrAccumulator::add_gain(const CMatrix& g) {
  for (int k = 0; k < k_; ++k) {
    const auto ki = static_cast<std::size_t>(k);
    cp_re_[ki].add(g(k, k).real());
    cp_im_[ki].add(g(k, k).imag());
    cp_abs2_[ki].add(std::norm(g(k, k)));
    for (int t = 0; t < k_; ++t)
      g_abs2_[ki * static_cast<std::size_t>(k_) + static_cast<std::size_t>(t)].add(std::norm(g(k, t)));
  }
  ++n_gain_;
}

void SinrAccumulator::add_distortion(const CVector& received) {
  for (int k = 0; k < k_; ++k) hwi_[static_cast<std::size_t>(k)].add(std::norm(received(k)));
  ++n_dist_;
}

SinrBreakdown SinrAccumulator::breakdown(int k) const {
  if (n_gain_ < 2) throw Error("SINR terms need at least two realizations");
  const auto ki = static_cast<std::size_t>(k);
  const double n = static_cast<double>(n_gain_);
  SinrBreakdown b;
  const cplx mean(cp_re_[ki].value() / n, cp_im_[ki].value() / n);
  b.cp = std::abs(mean);
  b.pu = std::max(0.0, cp_abs2_[ki].value() / n - std::norm(mean));
  b.ui.assign(static_cast<std::size_t>(k_), 0.0);
  for (int t = 0; t < k_; ++t)
    if (t != k)
      b.ui[static_cast<std::size_t>(t)] =
          g_abs2_[ki * static_cast<std::size_t>(k_) + static_cast<std::size_t>(t)].value() / n;
  b.hwi = n_dist_ ? hwi_[ki].value() / static_cast<double>(n_dist_) : 0.0;
  b.sinr = sinr_from_terms(b);
  return b;
}

double sinr_from_terms(const SinrBreakdown& b) {
  return b.cp * b.cp / (b.pu + b.ui_total() + b.hwi + b.noise);
}

double spectral_efficiency(double sinr, double prelog) {
  if (sinr < 0.0) throw Error("negative SINR");
  return prelog * std::log2(1.0 + sinr);
}

std::string to_string(ComplexityConvention c) {
  return c == ComplexityConvention::kTable ? "table" : "per_symbol";
}

ComplexityConvention parse_complexity_convention(const std::string& s) {
  if (s == "table") return ComplexityConvention::kTable;
  if (s == "per_symbol") return ComplexityConvention::kPerSymbol;
  throw ConfigError("unknown complexity convention '" + s + "' (table|per_symbol)");
}

ComplexityReport complexity_count(const std::string& method,
                                  const ComplexityParams& p,
                                  ComplexityConvention conv) {
  const double M = p.M, K = p.K, ts = p.tau_s, X = p.active, Ns = p.symbols;
  const double fft = X > 1 ? X * std::log2(X) : 0.0;
  const bool per_symbol = conv == ComplexityConvention::kPerSymbol;
  ComplexityReport r;
  r.method = method;
  r.convention = conv;
  r.params = p;
  if (method == "pzf") {
    r.multiplications = X * (M * K + 2.0 * M * ts * ts + ts * ts * ts) + Ns * X * M * K;
  } else if (method == "tr") {
    r.multiplications = Ns * M * p.tr_iterations * 2.0 * fft;
  } else if (method == "papr_aware") {
    const double iterative = p.papr_iterations * (2.0 * M * fft + X * M * M);
    r.multiplications = (per_symbol ? Ns : 1.0) * iterative +
                        (K * K * K + 2.0 * K * K * M + M * M * K);
  } else if (method == "hw_aware") {
    const double projection = M * ts + M * M * ts + M * M;
    r.multiplications = M * X * ts +
                        Ns * ((per_symbol ? X : 1.0) * projection + 3.0 * M * fft);
  } else {
    throw ConfigError("unknown complexity method '" + method + "'");
  }
  return r;
}

}  // namespace cfmimo
