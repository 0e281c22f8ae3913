#include "cfmimo/hwi_compensation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "cfmimo/linalg.hpp"

namespace cfmimo {

double symbol_power(const SymbolGrid& x, const std::vector<bool>& active) {
  double p = 0.0;
  int count = 0;
  for (Eigen::Index n = 0; n < x.cols(); ++n) {
    if (!active[static_cast<std::size_t>(n)]) continue;
    p += x.col(n).squaredNorm();
    ++count;
  }
  return count ? p / count : 0.0;
}

double enforce_power_budget(SymbolGrid& x, const std::vector<bool>& active,
                            double eta_max) {
  for (Eigen::Index n = 0; n < x.cols(); ++n)
    if (!active[static_cast<std::size_t>(n)]) x.col(n).setZero();
  const double p = symbol_power(x, active);
  if (!(p > eta_max)) return 1.0;
  const double rho = std::sqrt(eta_max / p);
  x *= rho;
  return rho;
}

PaOutput transmit_symbol(SymbolGrid x, const std::vector<bool>& active,
                         double eta_max, const Amplifier* pa,
                         const OfdmEngine& engine) {
  PaOutput out;
  out.rho = enforce_power_budget(x, active, eta_max);
  SymbolGrid a = engine.modulate(x);
  out.papr = papr_db(a);
  if (pa != nullptr) {
    pa->apply(a);
    engine.demodulate(a, out.y);
  } else {
    out.y = x;
  }
  out.d = out.y - x;
  out.x = std::move(x);
  return out;
}

// ---- tone reservation ----------------------------------------------------

std::vector<int> reserved_tones(const SimConfig& cfg) {
  const int n_active = cfg.num_active();
  const int n_tr = cfg.reserved_tones;
  std::vector<int> r;
  r.reserve(static_cast<std::size_t>(n_tr));
  for (int i = 0; i < n_tr; ++i)
    r.push_back(cfg.guard_subcarriers + (i * n_active) / n_tr);
  return r;
}

double tr_threshold(double rms_amplitude, int subcarriers, int chi) {
  if (chi < 1) throw ConfigError("threshold needs at least one distortion tone");
  if (chi >= subcarriers) throw ConfigError("threshold needs chi < N_sc");
  return rms_amplitude * std::sqrt(std::log(static_cast<double>(subcarriers) / chi));
}

namespace {

/// Clipping noise a - T e^{j phase(a)} where |a| > T, per antenna threshold.
void clipping_noise(const SymbolGrid& a, const RVector& threshold, SymbolGrid& c) {
  c.setZero(a.rows(), a.cols());
  for (Eigen::Index m = 0; m < a.rows(); ++m) {
    const double t = threshold(m);
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      const cplx v = a(m, i);
      const double p = std::norm(v);
      if (p > t * t) c(m, i) = v - v * (t / std::sqrt(p));
    }
  }
}

RVector row_rms(const SymbolGrid& a) {
  RVector r(a.rows());
  for (Eigen::Index m = 0; m < a.rows(); ++m)
    r(m) = std::sqrt(a.row(m).squaredNorm() / static_cast<double>(a.cols()));
  return r;
}

}  // namespace

TrReport tone_reservation(SymbolGrid& x, const std::vector<int>& reserved,
                          double threshold_factor, int iterations,
                          const OfdmEngine& engine) {
  TrReport rep;
  SymbolGrid a = engine.modulate(x);
  rep.peak_before = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  const RVector threshold = threshold_factor * row_rms(a);
  SymbolGrid c;
  SymbolGrid c_freq;
  for (int it = 0; it < iterations; ++it) {
    if (it > 0) engine.modulate(x, a);
    clipping_noise(a, threshold, c);
    if (c.isZero(0.0)) break;
    engine.demodulate(c, c_freq);
    for (int n : reserved) x.col(n) -= c_freq.col(n);
  }
  engine.modulate(x, a);
  rep.peak_after = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  return rep;
}

// ---- PAPR-aware precoding -------------------------------------------------

RVector papr_gamma(const UserGroups& papr_groups, int l, int tau_p,
                   double gamma_weak) {
  RVector g = RVector::Constant(tau_p, gamma_weak);
  for (int p : papr_groups.strong_pilots[static_cast<std::size_t>(l)]) g(p) = 0.0;
  return g;
}

CMatrix papr_projection_matrix(const CMatrix& h_bar, const RVector& gamma,
                               const std::string& context) {
  const Eigen::Index m = h_bar.rows();
  CMatrix gram = h_bar.adjoint() * h_bar;
  gram.diagonal() += gamma.cast<cplx>();
  const CMatrix inv = hermitian_inverse(gram, context);
  CMatrix v = CMatrix::Identity(m, m) - h_bar * inv * h_bar.adjoint();
  return v;
}

PaprAwareReport papr_aware_precode(SymbolGrid& x, const CMatrix& v,
                                   const std::vector<bool>& active,
                                   double threshold_factor, int iterations,
                                   const OfdmEngine& engine) {
  PaprAwareReport rep;
  SymbolGrid a = engine.modulate(x);
  const RVector threshold = threshold_factor * row_rms(a);
  SymbolGrid c;
  SymbolGrid eps;
  for (int p = 0; p < iterations; ++p) {
    if (p > 0) engine.modulate(x, a);
    rep.peak.push_back(a.size() ? a.cwiseAbs().maxCoeff() : 0.0);
    clipping_noise(a, threshold, c);
    if (c.isZero(0.0)) {
      rep.omega.push_back(0.0);
      break;
    }
    // clipped - a = -c
    engine.demodulate(c, eps);
    eps = -eps;
    CMatrix ve(x.rows(), x.cols());
    double omega_sum = 0.0;
    int omega_count = 0;
    for (Eigen::Index n = 0; n < x.cols(); ++n) {
      if (!active[static_cast<std::size_t>(n)]) {
        ve.col(n).setZero();
        continue;
      }
      ve.col(n).noalias() = v * eps.col(n);
      const double den = ve.col(n).squaredNorm();
      if (!(den > 0.0)) continue;
      const double num = ve.col(n).cwiseAbs().dot(eps.col(n).cwiseAbs());
      omega_sum += num / den;
      ++omega_count;
    }
    const double omega = omega_count ? omega_sum / omega_count : 0.0;
    rep.omega.push_back(omega);
    if (omega == 0.0) break;
    for (Eigen::Index n = 0; n < x.cols(); ++n)
      if (active[static_cast<std::size_t>(n)]) x.col(n) += omega * ve.col(n);
  }
  return rep;
}

// ---- sequential hardware-aware precoding ------------------------------------

CMatrix hw_aware_secondary_precoder(const PrecoderSet& ps, const ChannelSet& cs,
                                    const LargeScale& ls,
                                    const PilotAssignment& pilots,
                                    const UserGroups& groups, int l) {
  const auto li = static_cast<std::size_t>(l);
  const CMatrix& hb = cs.h_bar[li];
  const auto& sp = groups.strong_pilots[li];
  CMatrix w = CMatrix::Zero(hb.rows(), pilots.num_users());
  if (sp.empty()) return w;
  CMatrix basis;
  if (li < ps.zf_pilots.size() && ps.zf_pilots[li] == sp) {
    basis = ps.zf_basis[li];
  } else {
    basis = zero_forcing_basis(select_columns(hb, sp),
                               "AP " + std::to_string(l) + ", RB " +
                                   std::to_string(cs.rb_index) + " (secondary precoder)");
  }
  for (int k : groups.strong[li]) {
    const int j = groups.selection[li][static_cast<std::size_t>(k)];
    const double beta = ls.beta(l, k);
    const double theta = cs.stats.theta(l, k);
    const double c = cs.stats.c(l, k);
    if (!(beta > 0.0) || !(c > 0.0)) continue;
    w.col(k) = (std::sqrt(theta / beta) / c) * basis.col(j);
  }
  return w;
}

namespace {

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xFF));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& b, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& b, std::size_t off, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= std::uint64_t(b[off + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_message(const FronthaulMessage& msg) {
  std::vector<std::uint8_t> b;
  b.reserve(FronthaulMessage::kHeaderBytes + 16 * static_cast<std::size_t>(msg.payload.size()));
  put_u16(b, FronthaulMessage::kMagic);
  put_u16(b, static_cast<std::uint16_t>(msg.origin_ap));
  put_u32(b, static_cast<std::uint32_t>(msg.symbol));
  put_u32(b, static_cast<std::uint32_t>(msg.payload.rows()));
  put_u32(b, static_cast<std::uint32_t>(msg.payload.cols()));
  for (Eigen::Index n = 0; n < msg.payload.rows(); ++n)
    for (Eigen::Index k = 0; k < msg.payload.cols(); ++k) {
      put_f64(b, msg.payload(n, k).real());
      put_f64(b, msg.payload(n, k).imag());
    }
  return b;
}

FronthaulMessage decode_message(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < FronthaulMessage::kHeaderBytes)
    throw Error("fronthaul message shorter than its header");
  if (get_le(bytes, 0, 2) != FronthaulMessage::kMagic)
    throw Error("bad fronthaul message magic");
  FronthaulMessage msg;
  msg.origin_ap = static_cast<int>(get_le(bytes, 2, 2));
  msg.symbol = static_cast<int>(get_le(bytes, 4, 4));
  const auto rows = static_cast<Eigen::Index>(get_le(bytes, 8, 4));
  const auto cols = static_cast<Eigen::Index>(get_le(bytes, 12, 4));
  if (bytes.size() != FronthaulMessage::kHeaderBytes + 16 * static_cast<std::size_t>(rows * cols))
    throw Error("fronthaul payload size does not match its header");
  msg.payload.resize(rows, cols);
  std::size_t off = FronthaulMessage::kHeaderBytes;
  for (Eigen::Index n = 0; n < rows; ++n)
    for (Eigen::Index k = 0; k < cols; ++k) {
      const double re = std::bit_cast<double>(get_le(bytes, off, 8));
      const double im = std::bit_cast<double>(get_le(bytes, off + 8, 8));
      msg.payload(n, k) = {re, im};
      off += 16;
    }
  return msg;
}

PaOutput chain_step(const ChainAp& ap, int l, int symbol,
                    const FronthaulMessage* incoming,
                    const std::vector<bool>& active, double eta_max,
                    const OfdmEngine& engine, FronthaulMessage& outgoing) {
  SymbolGrid x = (*ap.primary)[static_cast<std::size_t>(symbol)];
  if (l > 0) {
    if (incoming == nullptr)
      throw ChainError("AP " + std::to_string(l) + " has no message from AP " +
                       std::to_string(l - 1) + " for symbol " + std::to_string(symbol));
    if (incoming->symbol != symbol || incoming->origin_ap != l - 1)
      throw ChainError("AP " + std::to_string(l) + " received an out-of-order message");
    Eigen::Index row = 0;
    for (Eigen::Index n = 0; n < x.cols(); ++n) {
      if (!active[static_cast<std::size_t>(n)]) continue;
      x.col(n).noalias() -= ap.w_prime * incoming->payload.row(row).transpose();
      ++row;
    }
  }
  const LimiterPa pa(ap.clip_level);
  PaOutput out = transmit_symbol(std::move(x), active, eta_max, &pa, engine);
  outgoing.origin_ap = l;
  outgoing.symbol = symbol;
  const auto n_active = std::count(active.begin(), active.end(), true);
  outgoing.payload.resize(n_active, ap.h_hat.cols());
  Eigen::Index row = 0;
  for (Eigen::Index n = 0; n < out.d.cols(); ++n) {
    if (!active[static_cast<std::size_t>(n)]) continue;
    outgoing.payload.row(row).noalias() = (ap.h_hat.adjoint() * out.d.col(n)).transpose();
    ++row;
  }
  return out;
}

namespace {

/// Single-producer single-consumer link between neighbouring APs.
class Link {
 public:
  void push(FronthaulMessage m) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      q_.push_back(std::move(m));
    }
    cv_.notify_one();
  }
  void close() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      closed_ = true;
    }
    cv_.notify_one();
  }
  std::optional<FronthaulMessage> pop() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return std::nullopt;
    FronthaulMessage m = std::move(q_.front());
    q_.pop_front();
    return m;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<FronthaulMessage> q_;
  bool closed_ = false;
};

}  // namespace

std::vector<ChainApResult> sequential_chain_transmit(
    const std::vector<ChainAp>& aps, const std::vector<bool>& active,
    double eta_max, const OfdmEngine& engine, ChainMode mode) {
  const int L = static_cast<int>(aps.size());
  std::vector<ChainApResult> res(aps.size());
  if (L == 0) return res;
  const int n_sym = static_cast<int>(aps[0].primary->size());
  for (auto& r : res) {
    r.symbols.resize(static_cast<std::size_t>(n_sym));
    r.sent.resize(static_cast<std::size_t>(n_sym));
  }

  if (mode == ChainMode::kSerial || L == 1) {
    for (int t = 0; t < n_sym; ++t) {
      const FronthaulMessage* prev = nullptr;
      for (int l = 0; l < L; ++l) {
        auto& r = res[static_cast<std::size_t>(l)];
        r.symbols[static_cast<std::size_t>(t)] =
            chain_step(aps[static_cast<std::size_t>(l)], l, t, prev, active, eta_max,
                       engine, r.sent[static_cast<std::size_t>(t)]);
        prev = &r.sent[static_cast<std::size_t>(t)];
      }
    }
    return res;
  }

  std::vector<Link> links(static_cast<std::size_t>(L - 1));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(L));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    workers.emplace_back([&, l] {
      const auto li = static_cast<std::size_t>(l);
      try {
        for (int t = 0; t < n_sym; ++t) {
          std::optional<FronthaulMessage> in;
          if (l > 0) in = links[li - 1].pop();
          auto& r = res[li];
          r.symbols[static_cast<std::size_t>(t)] =
              chain_step(aps[li], l, t, in ? &*in : nullptr, active, eta_max, engine,
                         r.sent[static_cast<std::size_t>(t)]);
          if (l + 1 < L) links[li].push(r.sent[static_cast<std::size_t>(t)]);
        }
      } catch (...) {
        errors[li] = std::current_exception();
      }
      if (l + 1 < L) links[li].close();
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return res;
}

cplx residual_hwi(const std::vector<CMatrix>& h,
                  const std::vector<CMatrix>& h_hat,
                  const std::vector<CMatrix>& w_prime,
                  const std::vector<CVector>& d, int k) {
  const std::size_t L = h.size();
  cplx acc(0.0, 0.0);
  for (std::size_t l = 0; l + 1 < L; ++l) {
    const Eigen::RowVectorXcd bracket =
        h[l].col(k).adjoint() - h[l + 1].col(k).adjoint() * w_prime[l + 1] * h_hat[l].adjoint();
    acc += (bracket * d[l])(0, 0);
  }
  if (L > 0) acc += h[L - 1].col(k).dot(d[L - 1]);
  return acc;
}

}  // namespace cfmimo
