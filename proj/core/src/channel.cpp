#include "cfmimo/channel.hpp"

#include <cmath>
#include <ostream>

namespace cfmimo {

EstimationStats estimation_stats(const LargeScale& ls,
                                 const PilotAssignment& pilots,
                                 const SimConfig& cfg) {
  const Eigen::Index L = ls.beta.rows();
  const Eigen::Index K = ls.beta.cols();
  const double eta_u = cfg.eta_u();
  const double tau = pilots.tau_p;
  EstimationStats s;
  s.c.resize(L, K);
  s.gamma.resize(L, K);
  for (Eigen::Index l = 0; l < L; ++l) {
    for (Eigen::Index k = 0; k < K; ++k) {
      double coset_gain = 0.0;
      for (int t : pilots.coset[static_cast<std::size_t>(k)]) coset_gain += ls.beta(l, t);
      const double denom = tau * eta_u * coset_gain + 1.0;
      const double b = ls.beta(l, k);
      s.c(l, k) = std::sqrt(eta_u) * b / denom;
      s.gamma(l, k) = eta_u * tau * b * b / denom;
    }
  }
  s.theta = s.gamma;
  return s;
}

std::vector<CMatrix> draw_channel(const LargeScale& ls, const SimConfig& cfg,
                                  Rng& rng) {
  const Eigen::Index L = ls.beta.rows();
  const Eigen::Index K = ls.beta.cols();
  std::vector<CMatrix> h(static_cast<std::size_t>(L), CMatrix(cfg.antennas, K));
  for (Eigen::Index l = 0; l < L; ++l) {
    CMatrix& hl = h[static_cast<std::size_t>(l)];
    for (Eigen::Index k = 0; k < K; ++k) {
      const double amp = std::sqrt(ls.beta(l, k));
      for (int m = 0; m < cfg.antennas; ++m) hl(m, k) = amp * complex_gaussian(rng);
    }
  }
  return h;
}

std::vector<CMatrix> simulate_pilot_phase(const std::vector<CMatrix>& h,
                                          const PilotAssignment& pilots,
                                          const SimConfig& cfg, Rng& rng) {
  const int tau = pilots.tau_p;
  const double amp = std::sqrt(cfg.eta_u());
  std::vector<CMatrix> h_bar;
  h_bar.reserve(h.size());
  for (const CMatrix& hl : h) {
    const Eigen::Index M = hl.rows();
    CMatrix y = CMatrix::Zero(M, tau);
    for (Eigen::Index k = 0; k < hl.cols(); ++k) {
      const int p = pilots.pilot_index[static_cast<std::size_t>(k)];
      y.noalias() += amp * hl.col(k) * pilots.pilot_book.col(p).adjoint();
    }
    if (cfg.pilot_noise) {
      for (Eigen::Index t = 0; t < tau; ++t)
        for (Eigen::Index m = 0; m < M; ++m) y(m, t) += complex_gaussian(rng);
    }
    h_bar.push_back(y * pilots.pilot_book);
  }
  return h_bar;
}

ChannelSet mmse_estimate(std::vector<CMatrix> h_bar, const LargeScale& ls,
                         const PilotAssignment& pilots, const SimConfig& cfg) {
  ChannelSet cs;
  cs.stats = estimation_stats(ls, pilots, cfg);
  const Eigen::Index K = ls.beta.cols();
  cs.h_hat.reserve(h_bar.size());
  for (std::size_t l = 0; l < h_bar.size(); ++l) {
    CMatrix est(h_bar[l].rows(), K);
    for (Eigen::Index k = 0; k < K; ++k)
      est.col(k) = cs.stats.c(Eigen::Index(l), k) *
                   h_bar[l].col(pilots.pilot_index[static_cast<std::size_t>(k)]);
    cs.h_hat.push_back(std::move(est));
  }
  cs.h_bar = std::move(h_bar);
  return cs;
}

ChannelSet perfect_csi(const std::vector<CMatrix>& h, const LargeScale& ls,
                       const PilotAssignment& pilots) {
  const Eigen::Index K = ls.beta.cols();
  if (K > pilots.tau_p)
    throw ConfigError("perfect CSI mode requires K <= tau_p");
  ChannelSet cs;
  cs.h = h;
  cs.h_hat = h;
  cs.stats.c = RMatrix::Ones(ls.beta.rows(), K);
  cs.stats.gamma = ls.beta;
  cs.stats.theta = ls.beta;
  for (const CMatrix& hl : h) {
    CMatrix hb = CMatrix::Zero(hl.rows(), pilots.tau_p);
    for (Eigen::Index k = 0; k < K; ++k)
      hb.col(pilots.pilot_index[static_cast<std::size_t>(k)]) = hl.col(k);
    cs.h_bar.push_back(std::move(hb));
  }
  return cs;
}

ChannelSet estimate_channels(std::vector<CMatrix> h, const LargeScale& ls,
                             const PilotAssignment& pilots,
                             const SimConfig& cfg, Rng& pilot_rng) {
  if (cfg.csi == CsiMode::kPerfect) return perfect_csi(h, ls, pilots);
  ChannelSet cs = mmse_estimate(simulate_pilot_phase(h, pilots, cfg, pilot_rng),
                                ls, pilots, cfg);
  cs.h = std::move(h);
  return cs;
}

void dump_channels(std::ostream& out, const ChannelSet& cs) {
  out << "kind,rb,ap,user,antenna,re,im\n";
  auto emit = [&](const char* kind, const std::vector<CMatrix>& mats) {
    for (std::size_t l = 0; l < mats.size(); ++l)
      for (Eigen::Index k = 0; k < mats[l].cols(); ++k)
        for (Eigen::Index m = 0; m < mats[l].rows(); ++m)
          out << kind << ',' << cs.rb_index << ',' << l << ',' << k << ',' << m
              << ',' << mats[l](m, k).real() << ',' << mats[l](m, k).imag()
              << '\n';
  };
  emit("h", cs.h);
  emit("h_hat", cs.h_hat);
}

}  // namespace cfmimo
