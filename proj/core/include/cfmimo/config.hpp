#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfmimo/types.hpp"

namespace cfmimo {

enum class CompensationMethod { kNone, kToneReservation, kPaprAware, kHwAware };
enum class PrecoderScheme { kMr, kFzf, kPzf };

/// How the APs obtain channel knowledge. kPerfect is a genie mode used by the
/// cancellation checks: estimates equal the true channel and theta = gamma =
/// beta.
enum class CsiMode { kMmse, kPerfect };

std::string to_string(CompensationMethod m);
std::string to_string(PrecoderScheme p);
std::string to_string(CsiMode c);
CompensationMethod parse_compensation(std::string_view s);
PrecoderScheme parse_precoder(std::string_view s);
CsiMode parse_csi(std::string_view s);

/// All scenario, OFDM, PA and algorithm parameters. Powers are given in dBm
/// and converted to noise-normalised linear units by the accessors below.
struct SimConfig {
  int num_aps = 8;                  // L
  int antennas = 8;                 // M
  int num_users = 7;                // K
  int pilot_length = 7;             // tau_p
  int coherence_length = 168;       // tau_c
  double duplex_fraction = 0.5;     // xi
  int total_subcarriers = 256;      // N
  int num_rb = 4;                   // N_rb
  int subcarriers_per_rb = 64;      // N_sc
  int guard_subcarriers = 2;        // N_GB, per band edge
  int symbols_per_block = 14;       // N_s
  double carrier_hz = 3.5e9;        // f_c
  double bandwidth_hz = 20e6;
  double noise_dbm = -93.0;
  double ul_power_dbm = 20.0;       // eta_u
  double sat_amplitude = 1.9;       // A_sat [V]
  double pa_gain = 16.0;            // G
  double ibo_db = 2.0;              // IBO
  double dl_power_dbm = 18.52;      // eta_dl, per AP
  double nu_th = 99.0;              // PZF grouping threshold [%]
  double nu_th_papr = 99.0;         // PAPR-aware grouping threshold [%]
  int reserved_tones = 8;           // N_TR
  int tr_iterations = 15;           // N_it_tr
  int papr_iterations = 5;          // N_it_papr
  double gamma_weak = 1.0;
  int channel_realizations = 25;    // N_chan
  int snapshots = 40;               // N_snapshots
  std::uint64_t seed = 1;
  CompensationMethod compensation = CompensationMethod::kNone;
  PrecoderScheme precoder = PrecoderScheme::kPzf;

  // Scenario geometry and propagation.
  double area_side = 500.0;
  int ap_grid_rows = 0;             // 0: pick the most square tiling
  double ap_height = 10.0;
  double ue_height = 1.5;
  double sigma_sh_db = 4.0;
  double pathloss_intercept_db = -30.5;
  double pathloss_slope_db = 36.7;  // dB per decade of distance

  // Front-end and estimation options.
  int oversampling = 1;
  CsiMode csi = CsiMode::kMmse;
  bool pilot_noise = true;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;

  int num_active() const { return subcarriers_per_rb - 2 * guard_subcarriers; }
  /// Active subcarrier indices (Xi) within one RB, ascending.
  std::vector<int> active_subcarriers() const;
  bool is_active(int subcarrier) const {
    return subcarrier >= guard_subcarriers &&
           subcarrier < subcarriers_per_rb - guard_subcarriers;
  }

  double noise_mw() const;
  /// Uplink pilot power normalised by the noise power.
  double eta_u() const;
  /// Per-AP downlink budget normalised by the noise power.
  double eta_max() const;
  /// xi * (1 - tau_p / tau_c).
  double prelog() const;
};

/// Nominal per-AP power M (A_sat / G)^2 10^(-IBO/10) in dBm; with the
/// defaults and IBO = 2 dB this is the 18.52 dBm default budget.
double nominal_dl_power_dbm(const SimConfig& cfg, double ibo_db);

/// Names of every configuration key, in file order.
const std::vector<std::string>& config_keys();

/// Sets one field from its textual value. Throws ConfigError on unknown keys
/// or unparsable values.
void set_config_field(SimConfig& cfg, std::string_view key,
                      std::string_view value);
std::string get_config_field(const SimConfig& cfg, std::string_view key);

nlohmann::ordered_json to_json(const SimConfig& cfg);
SimConfig config_from_json(const nlohmann::json& j);
SimConfig load_config(const std::string& path);
void save_config(const SimConfig& cfg, const std::string& path);

}  // namespace cfmimo
