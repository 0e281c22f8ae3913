#pragma once

#include <vector>

#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/scenario.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

/// Local precoders of every AP for one resource block (flat channel, so one
/// M x K matrix serves all its subcarriers).
struct PrecoderSet {
  PrecoderScheme scheme = PrecoderScheme::kMr;
  int rb_index = 0;
  std::vector<CMatrix> w;  // per AP, M x K, column k = w_{l,k}
  /// Scalar applied to each column's raw direction: 1/sqrt(M theta) for MR
  /// columns, sqrt((M - tau_s) theta) / c for zero-forcing columns.
  RMatrix norm;  // L x K
  /// Columns left at zero because theta_{l,k} = 0 (user not served by AP l).
  std::vector<std::vector<bool>> unserved;
  /// Per AP, the zero-forcing basis H_bar_S (H_bar_S^H H_bar_S)^{-1} over the
  /// strong (PZF) or all (FZF) pilots; empty for MR. Reused by the
  /// hardware-aware secondary precoder.
  std::vector<CMatrix> zf_basis;
  std::vector<std::vector<int>> zf_pilots;

  int num_aps() const { return static_cast<int>(w.size()); }
};

/// w_{l,k} = h_hat_{l,k} / sqrt(M theta_{l,k}).
PrecoderSet mr_precoder(const ChannelSet& cs, const SimConfig& cfg);

/// Full-pilot zero forcing over all tau_p pilot columns of H_bar.
PrecoderSet fzf_precoder(const ChannelSet& cs, const PilotAssignment& pilots,
                         const SimConfig& cfg);

/// Zero forcing towards the strong pilots of each AP, MR for weak users.
PrecoderSet pzf_precoder(const ChannelSet& cs, const PilotAssignment& pilots,
                         const UserGroups& groups, const SimConfig& cfg);

PrecoderSet build_precoders(PrecoderScheme scheme, const ChannelSet& cs,
                            const PilotAssignment& pilots,
                            const UserGroups& groups, const SimConfig& cfg);

/// Data symbols of one coherence block: per OFDM symbol a K x N_sc matrix,
/// zero on subcarriers that carry no data.
using SymbolBlock = std::vector<CMatrix>;

/// Unit-power QPSK on the subcarriers flagged in `data_tone`.
SymbolBlock draw_symbols(int num_users, const std::vector<bool>& data_tone,
                         int num_symbols, Rng& rng);

/// x_{l,n} = sum_k sqrt(eta_{l,k}) w_{l,k} s_{k,n} on data tones, zero
/// elsewhere.
Frame precode_symbols(const CMatrix& w, const RVector& sqrt_eta,
                      const SymbolBlock& symbols,
                      const std::vector<bool>& data_tone);

}  // namespace cfmimo
