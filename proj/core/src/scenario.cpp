#include "cfmimo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <set>

namespace cfmimo {

double distance(const Position& a, const Position& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

int most_square_rows(int count) {
  int rows = 1;
  for (int r = 1; r * r <= count; ++r)
    if (count % r == 0) rows = r;
  return rows;
}

}  // namespace

Topology generate_topology(const SimConfig& cfg, Rng& rng) {
  if (cfg.num_aps <= 0 || cfg.num_users <= 0)
    throw ConfigError("topology needs L > 0 and K > 0");
  if (cfg.area_side <= 0.0) throw ConfigError("area_side must be positive");

  Topology topo;
  topo.area_side = cfg.area_side;
  const int rows = cfg.ap_grid_rows > 0 ? cfg.ap_grid_rows
                                        : most_square_rows(cfg.num_aps);
  if (cfg.num_aps % rows != 0) {
    throw ConfigError("L = " + std::to_string(cfg.num_aps) +
                      " does not tile a grid with " + std::to_string(rows) +
                      " rows (" + std::to_string(rows) + " x " +
                      std::to_string(cfg.num_aps / rows) + " leaves " +
                      std::to_string(cfg.num_aps % rows) + " APs over)");
  }
  const int cols = cfg.num_aps / rows;
  topo.grid_rows = rows;
  topo.grid_cols = cols;

  const double dx = cfg.area_side / cols;
  const double dy = cfg.area_side / rows;
  topo.aps.reserve(static_cast<std::size_t>(cfg.num_aps));
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r)
      topo.aps.push_back({(c + 0.5) * dx, (r + 0.5) * dy, cfg.ap_height});

  std::uniform_real_distribution<double> u(0.0, cfg.area_side);
  topo.ues.reserve(static_cast<std::size_t>(cfg.num_users));
  for (int k = 0; k < cfg.num_users; ++k) {
    const double x = u(rng);
    const double y = u(rng);
    topo.ues.push_back({x, y, cfg.ue_height});
  }
  return topo;
}

double path_gain_db(const SimConfig& cfg, double distance_m) {
  return cfg.pathloss_intercept_db -
         cfg.pathloss_slope_db * std::log10(distance_m);
}

LargeScale compute_large_scale(const Topology& topo, const SimConfig& cfg,
                               Rng& rng) {
  const int L = static_cast<int>(topo.aps.size());
  const int K = static_cast<int>(topo.ues.size());
  LargeScale ls;
  ls.sigma_sh_db = cfg.sigma_sh_db;
  ls.beta.resize(L, K);
  std::normal_distribution<double> shadow(0.0, 1.0);
  const double noise = cfg.noise_mw();
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const double d = distance(topo.aps[static_cast<std::size_t>(l)],
                                topo.ues[static_cast<std::size_t>(k)]);
      if (!(d > 0.0)) {
        throw ConfigError("AP " + std::to_string(l) + " and UE " +
                          std::to_string(k) + " are co-located");
      }
      // Always draw so the stream does not depend on sigma_sh.
      const double z = shadow(rng) * cfg.sigma_sh_db;
      ls.beta(l, k) = std::pow(10.0, (path_gain_db(cfg, d) + z) / 10.0) / noise;
    }
  }
  return ls;
}

PilotAssignment assign_pilots(const LargeScale& ls, const SimConfig& cfg) {
  const int K = static_cast<int>(ls.beta.cols());
  const int tau = cfg.pilot_length;
  PilotAssignment pa;
  pa.tau_p = tau;
  pa.pilot_index.assign(static_cast<std::size_t>(K), -1);
  pa.users_on.assign(static_cast<std::size_t>(tau), {});

  for (int k = 0; k < K; ++k) {
    int chosen = 0;
    if (k < tau) {
      chosen = k;
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (int p = 0; p < tau; ++p) {
        double overlap = 0.0;
        for (int t : pa.users_on[static_cast<std::size_t>(p)])
          overlap += ls.beta.col(t).dot(ls.beta.col(k));
        if (overlap < best) {
          best = overlap;
          chosen = p;
        }
      }
    }
    pa.pilot_index[static_cast<std::size_t>(k)] = chosen;
    pa.users_on[static_cast<std::size_t>(chosen)].push_back(k);
  }

  pa.coset.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    pa.coset[static_cast<std::size_t>(k)] =
        pa.users_on[static_cast<std::size_t>(pa.pilot_index[static_cast<std::size_t>(k)])];

  pa.pilot_book.resize(tau, tau);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int t = 0; t < tau; ++t)
    for (int i = 0; i < tau; ++i)
      pa.pilot_book(t, i) = std::polar(1.0, -two_pi * t * i / tau);
  return pa;
}

UserGroups group_users(const LargeScale& ls, const PilotAssignment& pilots,
                       const SimConfig& cfg, double threshold_percent) {
  const int L = static_cast<int>(ls.beta.rows());
  const int K = static_cast<int>(ls.beta.cols());
  const int user_cap = std::min(cfg.antennas, cfg.pilot_length + 1);
  // The reduced Gram needs M - tau_S > 0 for its analytic normalisation.
  const int pilot_cap = cfg.antennas - 1;
  constexpr double kSlack = 1e-12;

  UserGroups g;
  g.strong.resize(static_cast<std::size_t>(L));
  g.weak.resize(static_cast<std::size_t>(L));
  g.strong_pilots.resize(static_cast<std::size_t>(L));
  g.selection.assign(static_cast<std::size_t>(L),
                     std::vector<int>(static_cast<std::size_t>(K), -1));

  for (int l = 0; l < L; ++l) {
    std::vector<int> order(static_cast<std::size_t>(K));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return ls.beta(l, a) > ls.beta(l, b);
    });
    const double total = ls.beta.row(l).sum();

    std::vector<bool> strong(static_cast<std::size_t>(K), false);
    if (total > 0.0) {
      double cum = 0.0;
      for (int k : order) {
        strong[static_cast<std::size_t>(k)] = true;
        cum += ls.beta(l, k);
        if (cum / total >= threshold_percent / 100.0 - kSlack) break;
      }
    }
    // Coset closure; pilot strength is its strongest member's gain.
    std::vector<double> pilot_strength(static_cast<std::size_t>(pilots.tau_p), -1.0);
    for (int k = 0; k < K; ++k) {
      if (!strong[static_cast<std::size_t>(k)]) continue;
      const int p = pilots.pilot_index[static_cast<std::size_t>(k)];
      pilot_strength[static_cast<std::size_t>(p)] =
          std::max(pilot_strength[static_cast<std::size_t>(p)], ls.beta(l, k));
    }
    std::vector<int> kept;
    for (int p = 0; p < pilots.tau_p; ++p)
      if (pilot_strength[static_cast<std::size_t>(p)] >= 0.0) kept.push_back(p);
    std::stable_sort(kept.begin(), kept.end(), [&](int a, int b) {
      return pilot_strength[static_cast<std::size_t>(a)] >
             pilot_strength[static_cast<std::size_t>(b)];
    });
    auto users_in = [&](const std::vector<int>& ps) {
      int n = 0;
      for (int p : ps) n += static_cast<int>(pilots.users_on[static_cast<std::size_t>(p)].size());
      return n;
    };
    while (!kept.empty() &&
           (users_in(kept) > user_cap || static_cast<int>(kept.size()) > pilot_cap))
      kept.pop_back();

    std::sort(kept.begin(), kept.end());
    g.strong_pilots[static_cast<std::size_t>(l)] = kept;
    for (int j = 0; j < static_cast<int>(kept.size()); ++j)
      for (int k : pilots.users_on[static_cast<std::size_t>(kept[static_cast<std::size_t>(j)])])
        g.selection[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] = j;
    for (int k = 0; k < K; ++k) {
      if (g.selection[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] >= 0)
        g.strong[static_cast<std::size_t>(l)].push_back(k);
      else
        g.weak[static_cast<std::size_t>(l)].push_back(k);
    }
  }
  return g;
}

PowerAllocation allocate_power(const RMatrix& gamma, double eta_max) {
  PowerAllocation pa;
  pa.eta_max = eta_max;
  pa.eta.resize(gamma.rows(), gamma.cols());
  for (Eigen::Index l = 0; l < gamma.rows(); ++l) {
    if ((gamma.row(l).array() < 0.0).any())
      throw NumericError("negative estimate mean-square at AP " + std::to_string(l));
    const double total = gamma.row(l).sum();
    if (!(total > 0.0))
      throw NumericError("AP " + std::to_string(l) +
                         " has all-zero estimate mean-squares (serves no user)");
    pa.eta.row(l) = gamma.row(l) / total * eta_max;
  }
  return pa;
}

}  // namespace cfmimo
