#pragma once

#include <cstdint>
#include <vector>

#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/rf_frontend.hpp"
#include "cfmimo/scenario.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

// ---- power budget --------------------------------------------------------

/// (1/|Xi|) sum_{n in Xi} ||x_n||^2 for one OFDM symbol.
double symbol_power(const SymbolGrid& x, const std::vector<bool>& active);

/// Scales x down to the budget when it is exceeded and zeroes tones outside
/// the active set. Returns the applied amplitude factor (1 when untouched).
double enforce_power_budget(SymbolGrid& x, const std::vector<bool>& active,
                            double eta_max);

/// What leaves one AP for one OFDM symbol.
struct PaOutput {
  SymbolGrid x;         // PA input, frequency domain, after the budget
  SymbolGrid y;         // PA output, frequency domain (in-band N_sc bins)
  SymbolGrid d;         // y - x, pure PA distortion
  double rho = 1.0;     // budget scaling applied to the input
  std::vector<double> papr;  // per antenna, of the PA input
};

/// Budget, IFFT, amplifier, FFT. A null amplifier models ideal hardware.
PaOutput transmit_symbol(SymbolGrid x, const std::vector<bool>& active,
                         double eta_max, const Amplifier* pa,
                         const OfdmEngine& engine);

// ---- tone reservation ----------------------------------------------------

/// N_TR logical subcarriers spread evenly over the active band.
std::vector<int> reserved_tones(const SimConfig& cfg);

/// rms * sqrt(ln(N_sc / chi)).
double tr_threshold(double rms_amplitude, int subcarriers, int chi);

struct TrReport {
  double peak_before = 0.0;
  double peak_after = 0.0;
};

/// Iterative clipping-noise injection on the reserved tones of one OFDM
/// symbol. Only the reserved tones of x are modified; the threshold is the
/// per-antenna rms of the input time signal times `threshold_factor`.
TrReport tone_reservation(SymbolGrid& x, const std::vector<int>& reserved,
                          double threshold_factor, int iterations,
                          const OfdmEngine& engine);

// ---- PAPR-aware precoding -------------------------------------------------

/// Pilot-indexed diagonal of Gamma at AP l: 0 on the strong pilots of the
/// PAPR grouping, gamma_weak elsewhere.
RVector papr_gamma(const UserGroups& papr_groups, int l, int tau_p,
                   double gamma_weak);

/// V = I - H_bar (H_bar^H H_bar + Gamma)^{-1} H_bar^H.
CMatrix papr_projection_matrix(const CMatrix& h_bar, const RVector& gamma,
                               const std::string& context);

struct PaprAwareReport {
  std::vector<double> omega;  // one per iteration
  std::vector<double> peak;   // max |a| before each iteration
};

/// Algorithm I on one OFDM symbol of one AP. The clipping threshold is the
/// per-antenna rms of the input time signal times `threshold_factor`.
PaprAwareReport papr_aware_precode(SymbolGrid& x, const CMatrix& v,
                                   const std::vector<bool>& active,
                                   double threshold_factor, int iterations,
                                   const OfdmEngine& engine);

// ---- sequential hardware-aware precoding ------------------------------------

/// W' at AP l: sqrt(theta/beta) times the zero-forcing column of the user's
/// pilot (scaled by 1/c like the primary precoder) for strong users, zero for
/// weak ones.
CMatrix hw_aware_secondary_precoder(const PrecoderSet& ps, const ChannelSet& cs,
                                    const LargeScale& ls,
                                    const PilotAssignment& pilots,
                                    const UserGroups& groups, int l);

/// User-perceived distortion H_hat^H d on the active tones of one symbol.
struct FronthaulMessage {
  int origin_ap = 0;
  int symbol = 0;
  CMatrix payload;  // |Xi| x K

  static constexpr std::uint16_t kMagic = 0xCF4D;
  static constexpr std::size_t kHeaderBytes = 16;
};

std::vector<std::uint8_t> encode_message(const FronthaulMessage& msg);
FronthaulMessage decode_message(const std::vector<std::uint8_t>& bytes);

/// Static inputs of one AP in the chain.
struct ChainAp {
  const std::vector<SymbolGrid>* primary = nullptr;  // W^PZF P s per symbol
  CMatrix w_prime;                                   // M x K
  CMatrix h_hat;                                     // M x K
  double clip_level = 0.0;
};

struct ChainApResult {
  std::vector<PaOutput> symbols;
  std::vector<FronthaulMessage> sent;
};

enum class ChainMode { kSerial, kPipelined };

/// Runs the radio stripe for every OFDM symbol. AP 0 sends the primary
/// signal; AP l subtracts W'_l m_{l-1} where m_{l-1} is its predecessor's
/// message for the same symbol. Pipelined mode runs one thread per AP with
/// symbol-ordered links and yields bit-identical results.
std::vector<ChainApResult> sequential_chain_transmit(
    const std::vector<ChainAp>& aps, const std::vector<bool>& active,
    double eta_max, const OfdmEngine& engine, ChainMode mode = ChainMode::kSerial);

/// One AP's step for one symbol. `incoming` must be non-null for l > 0.
PaOutput chain_step(const ChainAp& ap, int l, int symbol,
                    const FronthaulMessage* incoming,
                    const std::vector<bool>& active, double eta_max,
                    const OfdmEngine& engine, FronthaulMessage& outgoing);

/// sum_{l<L} [h_{l,k}^H - h_{l+1,k}^H W'_{l+1} H_hat_l^H] d_l + h_{L,k}^H d_L
/// for one subcarrier; d[l] is AP l's distortion vector.
cplx residual_hwi(const std::vector<CMatrix>& h,
                  const std::vector<CMatrix>& h_hat,
                  const std::vector<CMatrix>& w_prime,
                  const std::vector<CVector>& d, int k);

}  // namespace cfmimo
