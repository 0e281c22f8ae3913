#pragma once

#include <iosfwd>
#include <vector>

#include "cfmimo/config.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/scenario.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

/// MMSE scaling c, estimate mean-square gamma and the precoder normalisation
/// statistic theta (= gamma), all L x K. They depend on large-scale data only.
struct EstimationStats {
  RMatrix c;
  RMatrix gamma;
  RMatrix theta;
};

/// True channels and per-AP estimates for one resource block. The channel is
/// flat across the subcarriers of the block, so one M x K matrix per AP
/// describes every subcarrier of it.
struct ChannelSet {
  int rb_index = 0;
  std::vector<CMatrix> h;      // per AP, M x K
  std::vector<CMatrix> h_bar;  // per AP, M x tau_p (LS pilot matrix)
  std::vector<CMatrix> h_hat;  // per AP, M x K
  EstimationStats stats;

  int num_aps() const { return static_cast<int>(h_hat.size()); }
};

EstimationStats estimation_stats(const LargeScale& ls,
                                 const PilotAssignment& pilots,
                                 const SimConfig& cfg);

/// h_{l,k} = sqrt(beta_{l,k}) g, g ~ CN(0, I_M); one draw per RB.
std::vector<CMatrix> draw_channel(const LargeScale& ls, const SimConfig& cfg,
                                  Rng& rng);

/// Y_l = sum_k sqrt(eta_u) h_{l,k} phi_{i_k}^H + N_l, H_bar_l = Y_l Phi.
std::vector<CMatrix> simulate_pilot_phase(const std::vector<CMatrix>& h,
                                          const PilotAssignment& pilots,
                                          const SimConfig& cfg, Rng& rng);

/// h_hat_{l,k} = c_{l,k} H_bar_l e_{i_k}. The returned set carries no true
/// channels; callers attach them.
ChannelSet mmse_estimate(std::vector<CMatrix> h_bar, const LargeScale& ls,
                         const PilotAssignment& pilots, const SimConfig& cfg);

/// Genie estimates: h_hat = h, c = 1, theta = gamma = beta. The pilot matrix
/// holds each user's channel in its pilot column. Requires K <= tau_p.
ChannelSet perfect_csi(const std::vector<CMatrix>& h, const LargeScale& ls,
                       const PilotAssignment& pilots);

/// Full per-RB estimation step according to cfg.csi.
ChannelSet estimate_channels(std::vector<CMatrix> h, const LargeScale& ls,
                             const PilotAssignment& pilots,
                             const SimConfig& cfg, Rng& pilot_rng);

/// Columnar text dump (kind,rb,ap,user,antenna,re,im) of h and h_hat.
void dump_channels(std::ostream& out, const ChannelSet& cs);

}  // namespace cfmimo
