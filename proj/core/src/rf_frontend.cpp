#include "cfmimo/rf_frontend.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>

#include <fftw3.h>

namespace cfmimo {

namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (size, direction) and never freed.
fftw_plan cached_plan(int n, int sign) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find({n, sign});
  if (it != plans.end()) return it->second;
  std::vector<fftw_complex> in(static_cast<std::size_t>(n));
  std::vector<fftw_complex> out(static_cast<std::size_t>(n));
  fftw_plan p = fftw_plan_dft_1d(n, in.data(), out.data(), sign,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (p == nullptr) throw Error("FFTW failed to plan a size-" + std::to_string(n) + " DFT");
  plans.emplace(std::make_pair(n, sign), p);
  return p;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

OfdmEngine::OfdmEngine(int subcarriers, int oversampling)
    : n_sc_(subcarriers), os_(oversampling) {
  if (n_sc_ < 1 || n_sc_ % 2 != 0) throw ConfigError("N_sc must be even and positive");
  if (os_ < 1) throw ConfigError("oversampling must be >= 1");
  const int n_fft = fft_size();
  bins_.resize(static_cast<std::size_t>(n_sc_));
  for (int n = 0; n < n_sc_; ++n)
    bins_[static_cast<std::size_t>(n)] = ((n - n_sc_ / 2) % n_fft + n_fft) % n_fft;
  backward_ = cached_plan(n_fft, FFTW_BACKWARD);
  forward_ = cached_plan(n_fft, FFTW_FORWARD);
}

void OfdmEngine::modulate(const SymbolGrid& x, SymbolGrid& a) const {
  const int n_fft = fft_size();
  const auto plan = static_cast<fftw_plan>(backward_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_fft));
  a.resize(x.rows(), n_fft);
  thread_local std::vector<cplx> buf;
  buf.resize(static_cast<std::size_t>(n_fft));
  for (Eigen::Index m = 0; m < x.rows(); ++m) {
    std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
    for (int n = 0; n < n_sc_; ++n) buf[static_cast<std::size_t>(bin(n))] = x(m, n);
    fftw_execute_dft(plan, as_fftw(buf.data()), as_fftw(a.row(m).data()));
  }
  a *= scale;
}

SymbolGrid OfdmEngine::modulate(const SymbolGrid& x) const {
  SymbolGrid a;
  modulate(x, a);
  return a;
}

void OfdmEngine::demodulate(const SymbolGrid& a, SymbolGrid& x) const {
  const int n_fft = fft_size();
  if (a.cols() != n_fft) throw Error("demodulate: wrong time-domain length");
  const auto plan = static_cast<fftw_plan>(forward_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_fft));
  x.resize(a.rows(), n_sc_);
  thread_local std::vector<cplx> in;
  thread_local std::vector<cplx> out;
  in.resize(static_cast<std::size_t>(n_fft));
  out.resize(static_cast<std::size_t>(n_fft));
  for (Eigen::Index m = 0; m < a.rows(); ++m) {
    std::copy(a.row(m).data(), a.row(m).data() + n_fft, in.begin());
    fftw_execute_dft(plan, as_fftw(in.data()), as_fftw(out.data()));
    for (int n = 0; n < n_sc_; ++n)
      x(m, n) = scale * out[static_cast<std::size_t>(bin(n))];
  }
}

SymbolGrid OfdmEngine::demodulate(const SymbolGrid& a) const {
  SymbolGrid x;
  demodulate(a, x);
  return x;
}

void Amplifier::apply(SymbolGrid& a) const {
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = (*this)(a.data()[i]);
}

LimiterPa::LimiterPa(double clip_level) : clip_(clip_level) {
  if (!(clip_level > 0.0)) throw ConfigError("clip level must be positive");
}

cplx LimiterPa::operator()(cplx a) const {
  const double p = std::norm(a);
  const double c2 = clip_ * clip_;
  if (p <= c2) return a;
  cplx y = a * (clip_ / std::sqrt(p));
  // rounding can leave |y| just above the clip level; a second pass must be a no-op
  while (std::norm(y) > c2) y *= 1.0 - 0x1p-52;
  return y;
}

SymbolGrid limiter_pa(const SymbolGrid& a, double clip_level) {
  SymbolGrid out = a;
  LimiterPa(clip_level).apply(out);
  return out;
}

double clip_level_for(double rms_amplitude, double ibo_db) {
  return rms_amplitude * std::pow(10.0, ibo_db / 20.0);
}

double rms(const SymbolGrid& a) {
  if (a.size() == 0) return 0.0;
  return std::sqrt(a.squaredNorm() / static_cast<double>(a.size()));
}

DistortionEstimate extract_distortion(const SymbolGrid& a,
                                      const SymbolGrid& a_tilde,
                                      const OfdmEngine& engine) {
  DistortionEstimate est;
  est.d_time = a_tilde - a;
  engine.demodulate(est.d_time, est.d_freq);
  const double p = a.squaredNorm();
  if (p > 0.0) {
    cplx corr(0.0, 0.0);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      corr += a_tilde.data()[i] * std::conj(a.data()[i]);
    est.empirical_kappa = corr.real() / p;
  }
  return est;
}

double bussgang_gain(double gamma) {
  return 1.0 - std::exp(-gamma * gamma) +
         0.5 * std::sqrt(std::numbers::pi) * gamma * std::erfc(gamma);
}

std::vector<double> papr_db(const SymbolGrid& a, int* zero_rows) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(a.rows()));
  int zeros = 0;
  for (Eigen::Index m = 0; m < a.rows(); ++m) {
    const auto p = a.row(m).cwiseAbs2();
    const double mean = p.mean();
    if (!(mean > 0.0)) {
      ++zeros;
      continue;
    }
    out.push_back(10.0 * std::log10(p.maxCoeff() / mean));
  }
  if (zero_rows != nullptr) *zero_rows += zeros;
  return out;
}

void MetricCurve::write_csv(std::ostream& out) const {
  out << "threshold,probability\n";
  for (std::size_t i = 0; i < threshold.size(); ++i)
    out << threshold[i] << ',' << probability[i] << '\n';
}

std::vector<double> linear_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(std::max(n, 1)), lo);
  for (int i = 1; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return g;
}

namespace {

std::vector<double> sorted_nonempty(std::vector<double> samples) {
  if (samples.empty()) throw Error("empirical distribution of an empty sample");
  std::sort(samples.begin(), samples.end());
  return samples;
}

std::vector<double> distinct(const std::vector<double>& sorted) {
  std::vector<double> g = sorted;
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

}  // namespace

MetricCurve ccdf(std::vector<double> samples, const std::vector<double>& grid) {
  const auto s = sorted_nonempty(std::move(samples));
  MetricCurve c;
  c.threshold = grid.empty() ? distinct(s) : grid;
  const double n = static_cast<double>(s.size());
  for (double t : c.threshold) {
    const auto below = std::lower_bound(s.begin(), s.end(), t) - s.begin();
    c.probability.push_back((n - static_cast<double>(below)) / n);
  }
  return c;
}

MetricCurve cdf(std::vector<double> samples, const std::vector<double>& grid) {
  const auto s = sorted_nonempty(std::move(samples));
  MetricCurve c;
  c.threshold = grid.empty() ? distinct(s) : grid;
  const double n = static_cast<double>(s.size());
  for (double t : c.threshold) {
    const auto upto = std::upper_bound(s.begin(), s.end(), t) - s.begin();
    c.probability.push_back(static_cast<double>(upto) / n);
  }
  return c;
}

double median(std::vector<double> samples) {
  const auto s = sorted_nonempty(std::move(samples));
  const std::size_t n = s.size();
  if (n % 2 == 1) return s[n / 2];
  return 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double quantile(std::vector<double> samples, double q) {
  const auto s = sorted_nonempty(std::move(samples));
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(s.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, s.size() - 1);
  return s[i] + (pos - static_cast<double>(i)) * (s[j] - s[i]);
}

Histogram::Histogram(double lo, double hi, double width) : lo_(lo), width_(width) {
  if (!(hi > lo) || !(width > 0.0)) throw Error("bad histogram range");
  bins_.assign(static_cast<std::size_t>(std::llround((hi - lo) / width)), 0);
}

void Histogram::add(double v) {
  auto i = static_cast<long long>(std::floor((v - lo_) / width_));
  i = std::clamp<long long>(i, 0, static_cast<long long>(bins_.size()) - 1);
  ++bins_[static_cast<std::size_t>(i)];
  ++total_;
}

void Histogram::merge(const Histogram& other) {
  if (other.bins_.size() != bins_.size() || other.lo_ != lo_ || other.width_ != width_)
    throw Error("merging histograms with different binning");
  for (std::size_t i = 0; i < bins_.size(); ++i) bins_[i] += other.bins_[i];
  total_ += other.total_;
}

void Histogram::set_bins(std::vector<std::uint64_t> bins) {
  if (bins.size() != bins_.size()) throw Error("histogram bin count mismatch");
  bins_ = std::move(bins);
  total_ = 0;
  for (auto b : bins_) total_ += b;
}

double Histogram::ccdf_point(double p) const {
  if (total_ == 0) throw Error("empty histogram");
  std::uint64_t above = total_;
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    above -= bins_[i];
    if (static_cast<double>(above) <= p * static_cast<double>(total_))
      return lo_ + width_ * static_cast<double>(i + 1);
  }
  return lo_ + width_ * static_cast<double>(bins_.size());
}

double Histogram::median() const {
  if (total_ == 0) throw Error("empty histogram");
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    acc += bins_[i];
    if (2 * acc >= total_) return lo_ + width_ * (static_cast<double>(i) + 0.5);
  }
  return lo_ + width_ * static_cast<double>(bins_.size());
}

MetricCurve Histogram::ccdf() const {
  MetricCurve c;
  std::uint64_t above = total_;
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    c.threshold.push_back(lo_ + width_ * static_cast<double>(i));
    c.probability.push_back(total_ ? static_cast<double>(above) / static_cast<double>(total_) : 0.0);
    above -= bins_[i];
  }
  return c;
}

}  // namespace cfmimo
