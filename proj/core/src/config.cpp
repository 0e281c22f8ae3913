#include "cfmimo/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <type_traits>
#include <variant>

namespace cfmimo {

std::string to_string(CompensationMethod m) {
  switch (m) {
    case CompensationMethod::kNone: return "none";
    case CompensationMethod::kToneReservation: return "tr";
    case CompensationMethod::kPaprAware: return "papr_aware";
    case CompensationMethod::kHwAware: return "hw_aware";
  }
  return "?";
}

std::string to_string(PrecoderScheme p) {
  switch (p) {
    case PrecoderScheme::kMr: return "mr";
    case PrecoderScheme::kFzf: return "fzf";
    case PrecoderScheme::kPzf: return "pzf";
  }
  return "?";
}

std::string to_string(CsiMode c) {
  return c == CsiMode::kMmse ? "mmse" : "perfect";
}

CompensationMethod parse_compensation(std::string_view s) {
  if (s == "none") return CompensationMethod::kNone;
  if (s == "tr") return CompensationMethod::kToneReservation;
  if (s == "papr_aware") return CompensationMethod::kPaprAware;
  if (s == "hw_aware") return CompensationMethod::kHwAware;
  throw ConfigError("unknown compensation_method '" + std::string(s) +
                    "' (expected none|tr|papr_aware|hw_aware)");
}

PrecoderScheme parse_precoder(std::string_view s) {
  if (s == "mr") return PrecoderScheme::kMr;
  if (s == "fzf") return PrecoderScheme::kFzf;
  if (s == "pzf") return PrecoderScheme::kPzf;
  throw ConfigError("unknown precoder '" + std::string(s) +
                    "' (expected mr|fzf|pzf)");
}

CsiMode parse_csi(std::string_view s) {
  if (s == "mmse") return CsiMode::kMmse;
  if (s == "perfect") return CsiMode::kPerfect;
  throw ConfigError("unknown csi mode '" + std::string(s) + "'");
}

void SimConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid configuration: " + what);
  };
  require(num_aps > 0, "L must be positive");
  require(antennas > 0, "M must be positive");
  require(num_users > 0, "K must be positive");
  require(pilot_length >= 1, "tau_p must be >= 1");
  require(pilot_length <= coherence_length, "tau_p must not exceed tau_c");
  require(duplex_fraction > 0.0 && duplex_fraction <= 1.0, "xi must be in (0, 1]");
  require(num_rb > 0 && subcarriers_per_rb > 0, "N_rb and N_sc must be positive");
  require(subcarriers_per_rb * num_rb == total_subcarriers,
          "N_sc * N_rb must equal N (" + std::to_string(subcarriers_per_rb) +
              " * " + std::to_string(num_rb) +
              " != " + std::to_string(total_subcarriers) + ")");
  require(guard_subcarriers >= 0, "N_GB must be >= 0");
  require(reserved_tones >= 0, "N_TR must be >= 0");
  require(num_active() > reserved_tones,
          "|Xi| = N_sc - 2 N_GB must exceed N_TR");
  require(symbols_per_block >= 1, "N_s must be >= 1");
  require(nu_th > 0.0 && nu_th <= 100.0, "nu_th must be in (0, 100]");
  require(nu_th_papr > 0.0 && nu_th_papr <= 100.0,
          "nu_th_papr must be in (0, 100]");
  require(ibo_db >= 0.0, "IBO must be >= 0");
  require(precoder != PrecoderScheme::kFzf || antennas > pilot_length,
          "FZF requires M > tau_p");
  require(tr_iterations >= 0 && papr_iterations >= 0,
          "iteration counts must be >= 0");
  require(gamma_weak >= 0.0, "gamma_weak must be >= 0");
  require(channel_realizations >= 2, "N_chan must be >= 2");
  require(snapshots >= 1, "N_snapshots must be >= 1");
  require(area_side > 0.0, "area_side must be positive");
  require(ap_grid_rows >= 0, "ap_grid_rows must be >= 0");
  require(sigma_sh_db >= 0.0, "sigma_sh must be >= 0");
  require(oversampling >= 1, "oversampling must be >= 1");
  require(csi != CsiMode::kPerfect || num_users <= pilot_length,
          "perfect CSI mode requires K <= tau_p (no pilot reuse)");
}

std::vector<int> SimConfig::active_subcarriers() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(std::max(0, num_active())));
  for (int n = guard_subcarriers; n < subcarriers_per_rb - guard_subcarriers; ++n)
    out.push_back(n);
  return out;
}

double SimConfig::noise_mw() const { return std::pow(10.0, noise_dbm / 10.0); }

double SimConfig::eta_u() const {
  return std::pow(10.0, ul_power_dbm / 10.0) / noise_mw();
}

double SimConfig::eta_max() const {
  return std::pow(10.0, dl_power_dbm / 10.0) / noise_mw();
}

double SimConfig::prelog() const {
  return duplex_fraction *
         (1.0 - static_cast<double>(pilot_length) / coherence_length);
}

double nominal_dl_power_dbm(const SimConfig& cfg, double ibo_db) {
  const double clip = cfg.sat_amplitude / cfg.pa_gain;
  const double watts = cfg.antennas * clip * clip;
  return 10.0 * std::log10(watts * 1e3) - ibo_db;
}

namespace {

using Member =
    std::variant<int SimConfig::*, double SimConfig::*,
                 std::uint64_t SimConfig::*, bool SimConfig::*,
                 CompensationMethod SimConfig::*, PrecoderScheme SimConfig::*,
                 CsiMode SimConfig::*>;

struct Field {
  const char* key;
  Member member;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"L", &SimConfig::num_aps},
      {"M", &SimConfig::antennas},
      {"K", &SimConfig::num_users},
      {"tau_p", &SimConfig::pilot_length},
      {"tau_c", &SimConfig::coherence_length},
      {"xi", &SimConfig::duplex_fraction},
      {"N", &SimConfig::total_subcarriers},
      {"N_rb", &SimConfig::num_rb},
      {"N_sc", &SimConfig::subcarriers_per_rb},
      {"N_GB", &SimConfig::guard_subcarriers},
      {"N_s", &SimConfig::symbols_per_block},
      {"f_c", &SimConfig::carrier_hz},
      {"bandwidth", &SimConfig::bandwidth_hz},
      {"noise_power", &SimConfig::noise_dbm},
      {"eta_u", &SimConfig::ul_power_dbm},
      {"A_sat", &SimConfig::sat_amplitude},
      {"G", &SimConfig::pa_gain},
      {"IBO", &SimConfig::ibo_db},
      {"eta_dl", &SimConfig::dl_power_dbm},
      {"nu_th", &SimConfig::nu_th},
      {"nu_th_papr", &SimConfig::nu_th_papr},
      {"N_TR", &SimConfig::reserved_tones},
      {"N_it_tr", &SimConfig::tr_iterations},
      {"N_it_papr", &SimConfig::papr_iterations},
      {"gamma_weak", &SimConfig::gamma_weak},
      {"N_chan", &SimConfig::channel_realizations},
      {"N_snapshots", &SimConfig::snapshots},
      {"seed", &SimConfig::seed},
      {"compensation_method", &SimConfig::compensation},
      {"precoder", &SimConfig::precoder},
      {"area_side", &SimConfig::area_side},
      {"ap_grid_rows", &SimConfig::ap_grid_rows},
      {"ap_height", &SimConfig::ap_height},
      {"ue_height", &SimConfig::ue_height},
      {"sigma_sh", &SimConfig::sigma_sh_db},
      {"pathloss_intercept", &SimConfig::pathloss_intercept_db},
      {"pathloss_slope", &SimConfig::pathloss_slope_db},
      {"oversampling", &SimConfig::oversampling},
      {"csi", &SimConfig::csi},
      {"pilot_noise", &SimConfig::pilot_noise},
  };
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields())
    if (key == f.key) return f;
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  std::string s(text);
  try {
    std::size_t used = 0;
    T value{};
    if constexpr (std::is_same_v<T, int>) {
      value = std::stoi(s, &used);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      value = std::stoull(s, &used);
    } else {
      value = std::stod(s, &used);
    }
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse value '" + s + "' for key '" +
                      std::string(key) + "'");
  }
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.emplace_back(f.key);
    return k;
  }();
  return keys;
}

void set_config_field(SimConfig& cfg, std::string_view key,
                      std::string_view value) {
  const Field& f = find_field(key);
  std::visit(
      [&](auto member) {
        using T = std::decay_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1") cfg.*member = true;
          else if (value == "false" || value == "0") cfg.*member = false;
          else
            throw ConfigError("cannot parse boolean '" + std::string(value) +
                              "' for key '" + std::string(key) + "'");
        } else if constexpr (std::is_same_v<T, CompensationMethod>) {
          cfg.*member = parse_compensation(value);
        } else if constexpr (std::is_same_v<T, PrecoderScheme>) {
          cfg.*member = parse_precoder(value);
        } else if constexpr (std::is_same_v<T, CsiMode>) {
          cfg.*member = parse_csi(value);
        } else {
          cfg.*member = parse_number<T>(key, value);
        }
      },
      f.member);
}

std::string get_config_field(const SimConfig& cfg, std::string_view key) {
  const Field& f = find_field(key);
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::decay_t<decltype(cfg.*member)>;
        const T& v = cfg.*member;
        if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_arithmetic_v<T>) return std::to_string(v);
        else return to_string(v);
      },
      f.member);
}

nlohmann::ordered_json to_json(const SimConfig& cfg) {
  nlohmann::ordered_json j;
  for (const auto& f : fields()) {
    std::visit(
        [&](auto member) {
          using T = std::decay_t<decltype(cfg.*member)>;
          const T& v = cfg.*member;
          if constexpr (std::is_same_v<T, double>) {
            // JSON has no infinity; keep it as a string so it round-trips.
            if (std::isfinite(v)) j[f.key] = v;
            else j[f.key] = format_double(v);
          } else if constexpr (std::is_arithmetic_v<T>) {
            j[f.key] = v;
          } else {
            j[f.key] = to_string(v);
          }
        },
        f.member);
  }
  return j;
}

SimConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  SimConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      set_config_field(cfg, key, value.get<std::string>());
    } else if (value.is_boolean()) {
      set_config_field(cfg, key, value.get<bool>() ? "true" : "false");
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      set_config_field(cfg, key, value.dump());
    } else if (value.is_number_float()) {
      set_config_field(cfg, key, format_double(value.get<double>()));
    } else {
      throw ConfigError("unsupported value type for key '" + key + "'");
    }
  }
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed configuration file " + path + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const SimConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write configuration file " + path);
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace cfmimo
