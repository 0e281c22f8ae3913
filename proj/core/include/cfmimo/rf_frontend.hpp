#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cfmimo/types.hpp"

namespace cfmimo {

/// Unitary OFDM modulator for N_sc logical subcarriers with optional
/// oversampling. Logical subcarrier n sits at frequency n - N_sc/2, i.e. the
/// band is centred on DC. Cheap to copy; FFTW plans live in a shared cache.
class OfdmEngine {
 public:
  OfdmEngine(int subcarriers, int oversampling = 1);

  int subcarriers() const { return n_sc_; }
  int oversampling() const { return os_; }
  int fft_size() const { return n_sc_ * os_; }
  /// FFT bin that carries logical subcarrier n.
  int bin(int n) const { return bins_[static_cast<std::size_t>(n)]; }

  /// Frequency grid (antennas x N_sc) to time samples (antennas x O N_sc).
  void modulate(const SymbolGrid& x, SymbolGrid& a) const;
  SymbolGrid modulate(const SymbolGrid& x) const;
  /// Inverse of modulate; out-of-band bins of an oversampled signal are
  /// dropped.
  void demodulate(const SymbolGrid& a, SymbolGrid& x) const;
  SymbolGrid demodulate(const SymbolGrid& a) const;

 private:
  int n_sc_;
  int os_;
  std::vector<int> bins_;
  void* backward_ = nullptr;  // fftw_plan, owned by the process-wide cache
  void* forward_ = nullptr;
};

/// Memoryless amplifier acting on complex baseband samples.
class Amplifier {
 public:
  virtual ~Amplifier() = default;
  virtual cplx operator()(cplx a) const = 0;
  void apply(SymbolGrid& a) const;
};

/// Ideal limiter: linear up to clip_level, phase-preserving hard clip above.
class LimiterPa final : public Amplifier {
 public:
  explicit LimiterPa(double clip_level);
  cplx operator()(cplx a) const override;
  double clip_level() const { return clip_; }

 private:
  double clip_;
};

SymbolGrid limiter_pa(const SymbolGrid& a, double clip_level);

/// Clip level for a signal of the given rms amplitude at back-off ibo_db.
double clip_level_for(double rms, double ibo_db);

double rms(const SymbolGrid& a);

struct DistortionEstimate {
  SymbolGrid d_time;  // a_tilde - a
  SymbolGrid d_freq;  // demodulated d_time, antennas x N_sc
  double kappa0 = 1.0;
  /// E[a_tilde a*] / E[|a|^2] over the frame; diagnostic only.
  double empirical_kappa = 1.0;
};

DistortionEstimate extract_distortion(const SymbolGrid& a,
                                      const SymbolGrid& a_tilde,
                                      const OfdmEngine& engine);

/// Linear gain of a soft limiter driven by complex Gaussian input, with
/// gamma = clip level / rms.
double bussgang_gain(double gamma);

/// PAPR in dB of every antenna row of one OFDM symbol. Rows with zero power
/// are skipped and counted in `zero_rows`.
std::vector<double> papr_db(const SymbolGrid& a, int* zero_rows = nullptr);

struct MetricCurve {
  std::vector<double> threshold;
  std::vector<double> probability;

  void write_csv(std::ostream& out) const;
};

/// Evenly spaced grid of n points over [lo, hi].
std::vector<double> linear_grid(double lo, double hi, int n);

/// P(X >= t) on the grid, or on the sorted distinct samples when grid is
/// empty.
MetricCurve ccdf(std::vector<double> samples, const std::vector<double>& grid = {});
/// P(X <= t).
MetricCurve cdf(std::vector<double> samples, const std::vector<double>& grid = {});

double median(std::vector<double> samples);
double quantile(std::vector<double> samples, double q);

/// Fixed-bin histogram used to keep PAPR populations mergeable and small.
class Histogram {
 public:
  Histogram(double lo = 0.0, double hi = 20.0, double width = 0.05);

  void add(double v);
  void merge(const Histogram& other);

  std::size_t count() const { return total_; }
  double lo() const { return lo_; }
  double width() const { return width_; }
  const std::vector<std::uint64_t>& bins() const { return bins_; }
  void set_bins(std::vector<std::uint64_t> bins);

  /// Value at which the empirical CCDF falls to p (upper bin edge).
  double ccdf_point(double p) const;
  double median() const;
  MetricCurve ccdf() const;

 private:
  double lo_;
  double width_;
  std::vector<std::uint64_t> bins_;
  std::size_t total_ = 0;
};

}  // namespace cfmimo
