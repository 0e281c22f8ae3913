#include "cfmimo/precoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cfmimo/linalg.hpp"

namespace cfmimo {

namespace {

PrecoderSet empty_set(PrecoderScheme scheme, const ChannelSet& cs) {
  PrecoderSet ps;
  ps.scheme = scheme;
  ps.rb_index = cs.rb_index;
  const int L = cs.num_aps();
  const Eigen::Index K = cs.stats.theta.cols();
  ps.w.reserve(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l)
    ps.w.push_back(CMatrix::Zero(cs.h_hat[static_cast<std::size_t>(l)].rows(), K));
  ps.norm = RMatrix::Zero(L, K);
  ps.unserved.assign(static_cast<std::size_t>(L),
                     std::vector<bool>(static_cast<std::size_t>(K), false));
  ps.zf_basis.assign(static_cast<std::size_t>(L), CMatrix());
  ps.zf_pilots.assign(static_cast<std::size_t>(L), {});
  return ps;
}

void set_mr_column(PrecoderSet& ps, const ChannelSet& cs, int l, int k) {
  const double theta = cs.stats.theta(l, k);
  const CMatrix& est = cs.h_hat[static_cast<std::size_t>(l)];
  if (!(theta > 0.0)) {
    ps.unserved[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] = true;
    return;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(est.rows()) * theta);
  ps.norm(l, k) = scale;
  ps.w[static_cast<std::size_t>(l)].col(k) = scale * est.col(k);
}

std::string where(int l, int rb) {
  return "AP " + std::to_string(l) + ", RB " + std::to_string(rb) +
         " (all subcarriers of the block)";
}

/// Zero-forcing columns for the users whose pilots are in `zf_pilots`.
void set_zf_columns(PrecoderSet& ps, const ChannelSet& cs,
                    const PilotAssignment& pilots, int l,
                    const std::vector<int>& zf_pilots,
                    const std::vector<int>& users) {
  const CMatrix& hb = cs.h_bar[static_cast<std::size_t>(l)];
  CMatrix basis = zero_forcing_basis(select_columns(hb, zf_pilots),
                                     where(l, cs.rb_index));
  const double dof = static_cast<double>(hb.rows()) - static_cast<double>(zf_pilots.size());
  for (int k : users) {
    const int p = pilots.pilot_index[static_cast<std::size_t>(k)];
    const auto it = std::find(zf_pilots.begin(), zf_pilots.end(), p);
    const auto j = static_cast<Eigen::Index>(it - zf_pilots.begin());
    const double theta = cs.stats.theta(l, k);
    const double c = cs.stats.c(l, k);
    if (!(theta > 0.0) || !(c > 0.0)) {
      ps.unserved[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] = true;
      continue;
    }
    const double scale = std::sqrt(dof * theta) / c;
    ps.norm(l, k) = scale;
    ps.w[static_cast<std::size_t>(l)].col(k) = scale * basis.col(j);
  }
  ps.zf_basis[static_cast<std::size_t>(l)] = std::move(basis);
  ps.zf_pilots[static_cast<std::size_t>(l)] = zf_pilots;
}

}  // namespace

PrecoderSet mr_precoder(const ChannelSet& cs, const SimConfig&) {
  PrecoderSet ps = empty_set(PrecoderScheme::kMr, cs);
  const int K = static_cast<int>(cs.stats.theta.cols());
  for (int l = 0; l < cs.num_aps(); ++l)
    for (int k = 0; k < K; ++k) set_mr_column(ps, cs, l, k);
  return ps;
}

PrecoderSet fzf_precoder(const ChannelSet& cs, const PilotAssignment& pilots,
                         const SimConfig& cfg) {
  if (cfg.antennas <= pilots.tau_p)
    throw ConfigError("FZF requires M > tau_p");
  PrecoderSet ps = empty_set(PrecoderScheme::kFzf, cs);
  std::vector<int> all_pilots(static_cast<std::size_t>(pilots.tau_p));
  std::iota(all_pilots.begin(), all_pilots.end(), 0);
  std::vector<int> users(static_cast<std::size_t>(pilots.num_users()));
  std::iota(users.begin(), users.end(), 0);
  for (int l = 0; l < cs.num_aps(); ++l)
    set_zf_columns(ps, cs, pilots, l, all_pilots, users);
  return ps;
}

PrecoderSet pzf_precoder(const ChannelSet& cs, const PilotAssignment& pilots,
                         const UserGroups& groups, const SimConfig&) {
  PrecoderSet ps = empty_set(PrecoderScheme::kPzf, cs);
  for (int l = 0; l < cs.num_aps(); ++l) {
    const auto& sp = groups.strong_pilots[static_cast<std::size_t>(l)];
    if (!sp.empty())
      set_zf_columns(ps, cs, pilots, l, sp, groups.strong[static_cast<std::size_t>(l)]);
    for (int k : groups.weak[static_cast<std::size_t>(l)]) set_mr_column(ps, cs, l, k);
  }
  return ps;
}

PrecoderSet build_precoders(PrecoderScheme scheme, const ChannelSet& cs,
                            const PilotAssignment& pilots,
                            const UserGroups& groups, const SimConfig& cfg) {
  switch (scheme) {
    case PrecoderScheme::kMr: return mr_precoder(cs, cfg);
    case PrecoderScheme::kFzf: return fzf_precoder(cs, pilots, cfg);
    case PrecoderScheme::kPzf: return pzf_precoder(cs, pilots, groups, cfg);
  }
  throw ConfigError("unknown precoder scheme");
}

SymbolBlock draw_symbols(int num_users, const std::vector<bool>& data_tone,
                         int num_symbols, Rng& rng) {
  const auto n_sc = static_cast<Eigen::Index>(data_tone.size());
  SymbolBlock block(static_cast<std::size_t>(num_symbols),
                    CMatrix::Zero(num_users, n_sc));
  for (auto& s : block)
    for (Eigen::Index n = 0; n < n_sc; ++n)
      if (data_tone[static_cast<std::size_t>(n)])
        for (int k = 0; k < num_users; ++k) s(k, n) = qpsk_symbol(rng);
  return block;
}

Frame precode_symbols(const CMatrix& w, const RVector& sqrt_eta,
                      const SymbolBlock& symbols,
                      const std::vector<bool>& data_tone) {
  const CMatrix weighted = w * sqrt_eta.cast<cplx>().asDiagonal();
  const auto n_sc = static_cast<int>(data_tone.size());
  Frame frame(static_cast<int>(w.rows()), n_sc, static_cast<int>(symbols.size()));
  for (std::size_t t = 0; t < symbols.size(); ++t) {
    SymbolGrid& x = frame.symbols[t];
    x.noalias() = weighted * symbols[t];
    for (int n = 0; n < n_sc; ++n)
      if (!data_tone[static_cast<std::size_t>(n)]) x.col(n).setZero();
  }
  return frame;
}

}  // namespace cfmimo
