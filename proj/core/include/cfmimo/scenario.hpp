#pragma once

#include <vector>

#include "cfmimo/config.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

struct Position {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double distance(const Position& a, const Position& b);

struct Topology {
  std::vector<Position> aps;
  std::vector<Position> ues;
  double area_side = 0.0;
  int grid_rows = 0;
  int grid_cols = 0;
};

/// Linear large-scale gains, already divided by the noise power.
struct LargeScale {
  RMatrix beta;  // L x K
  double sigma_sh_db = 0.0;
};

/// Pilot indices are 0-based here (pilot i_k = pilot_index[k] + 1).
struct PilotAssignment {
  int tau_p = 0;
  std::vector<int> pilot_index;               // per user
  std::vector<std::vector<int>> coset;        // P_k, ascending, contains k
  std::vector<std::vector<int>> users_on;     // per pilot, ascending
  CMatrix pilot_book;                         // tau_p x tau_p, columns phi_i

  bool shares_pilot(int k, int t) const {
    return pilot_index[static_cast<std::size_t>(k)] ==
           pilot_index[static_cast<std::size_t>(t)];
  }
  int num_users() const { return static_cast<int>(pilot_index.size()); }
};

/// Strong/weak split per AP. The reduced zero-forcing problem at AP l is over
/// strong_pilots[l]; selection[l][k] is the column position j_{l,k} of user
/// k's pilot among them, or -1 for weak users.
struct UserGroups {
  std::vector<std::vector<int>> strong;
  std::vector<std::vector<int>> weak;
  std::vector<std::vector<int>> strong_pilots;  // ascending pilot index
  std::vector<std::vector<int>> selection;

  int num_aps() const { return static_cast<int>(strong.size()); }
  int tau_s(int l) const {
    return static_cast<int>(strong[static_cast<std::size_t>(l)].size());
  }
  int num_strong_pilots(int l) const {
    return static_cast<int>(strong_pilots[static_cast<std::size_t>(l)].size());
  }
  bool is_strong(int l, int k) const {
    return selection[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] >= 0;
  }
};

struct PowerAllocation {
  RMatrix eta;  // L x K
  double eta_max = 0.0;

  /// Diagonal of P_l, i.e. sqrt(eta_{l,k}).
  RVector sqrt_eta(int l) const { return eta.row(l).transpose().cwiseSqrt(); }
};

/// AP grid over the square area (rows x cols, cell-centred), UEs uniform.
/// APs are listed column by column; this is also the fronthaul order.
Topology generate_topology(const SimConfig& cfg, Rng& rng);

/// Log-distance path loss with log-normal shadowing, normalised by noise.
LargeScale compute_large_scale(const Topology& topo, const SimConfig& cfg,
                               Rng& rng);

/// Path gain in dB before noise normalisation, no shadowing.
double path_gain_db(const SimConfig& cfg, double distance_m);

/// Users 0..tau_p-1 get distinct pilots; the rest greedily take the pilot
/// with the least large-scale overlap with its current holders.
PilotAssignment assign_pilots(const LargeScale& ls, const SimConfig& cfg);

/// Grouping by cumulative share of the per-AP channel gain, closed under
/// pilot cosets and capped at min(M, tau_p + 1) users and M - 1 pilots.
UserGroups group_users(const LargeScale& ls, const PilotAssignment& pilots,
                       const SimConfig& cfg, double threshold_percent);
inline UserGroups group_users(const LargeScale& ls,
                              const PilotAssignment& pilots,
                              const SimConfig& cfg) {
  return group_users(ls, pilots, cfg, cfg.nu_th);
}

/// eta_{l,k} = gamma_{l,k} / sum_i gamma_{l,i} * eta_max.
PowerAllocation allocate_power(const RMatrix& gamma, double eta_max);

}  // namespace cfmimo
