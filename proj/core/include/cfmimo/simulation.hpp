#pragma once

#include <cstdint>
#include <vector>

#include "cfmimo/config.hpp"
#include "cfmimo/hwi_compensation.hpp"
#include "cfmimo/metrics.hpp"
#include "cfmimo/rf_frontend.hpp"

namespace cfmimo {

/// Per-user SINR term means over the resource blocks of a snapshot.
struct TermSummary {
  double cp2 = 0.0;  // |CP|^2
  double pu = 0.0;
  double ui = 0.0;   // summed over interferers
  double hwi = 0.0;
  double sinr = 0.0;
};

/// Budget bookkeeping over every transmitted OFDM symbol of a snapshot.
struct PowerAudit {
  double max_power_ratio = 0.0;  // max P / eta_max over APs and symbols
  double max_guard_power = 0.0;  // max ||x_n||^2 over guard tones
  double min_rho = 1.0;          // smallest budget scaling applied
  std::uint64_t frames = 0;
  std::uint64_t scaled_frames = 0;

  void merge(const PowerAudit& o);
  bool within_budget(double tol = 1e-9) const {
    return max_power_ratio <= 1.0 + tol && max_guard_power == 0.0;
  }
};

struct SnapshotRecord {
  int snapshot = 0;
  std::uint64_t seed = 0;
  std::vector<double> se;        // per user, with the configured method
  std::vector<double> se_ideal;  // per user, same channels, no PA
  std::vector<TermSummary> terms;
  Histogram papr;                // per antenna and symbol, PA input
  double papr_median = 0.0;
  int papr_zero_rows = 0;
  PowerAudit power;
  std::vector<int> tau_s;        // PZF strong-set size per AP
};

struct SnapshotOptions {
  ChainMode chain_mode = ChainMode::kSerial;
  /// When set, every PAPR sample is appended here as well.
  std::vector<double>* papr_samples = nullptr;
};

/// One topology and large-scale draw followed by N_chan realizations of every
/// resource block through estimation, precoding, compensation, PA and the
/// SINR accumulators.
SnapshotRecord run_snapshot(const SimConfig& cfg, std::uint64_t seed,
                            int snapshot_index = 0,
                            const SnapshotOptions& opts = {});

/// Prelog of the configured method (TR loses its reserved tones).
double method_prelog(const SimConfig& cfg);

}  // namespace cfmimo
