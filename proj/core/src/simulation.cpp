#include "cfmimo/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cfmimo/channel.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/scenario.hpp"

namespace cfmimo {

void PowerAudit::merge(const PowerAudit& o) {
  max_power_ratio = std::max(max_power_ratio, o.max_power_ratio);
  max_guard_power = std::max(max_guard_power, o.max_guard_power);
  min_rho = std::min(min_rho, o.min_rho);
  frames += o.frames;
  scaled_frames += o.scaled_frames;
}

double method_prelog(const SimConfig& cfg) {
  double p = cfg.prelog();
  if (cfg.compensation == CompensationMethod::kToneReservation)
    p *= static_cast<double>(cfg.num_active() - cfg.reserved_tones) / cfg.num_active();
  return p;
}

namespace {

void audit(PowerAudit& pa, const PaOutput& out, const std::vector<bool>& active,
           double eta_max) {
  pa.max_power_ratio = std::max(pa.max_power_ratio, symbol_power(out.x, active) / eta_max);
  for (Eigen::Index n = 0; n < out.x.cols(); ++n)
    if (!active[static_cast<std::size_t>(n)])
      pa.max_guard_power = std::max(pa.max_guard_power, out.x.col(n).squaredNorm());
  pa.min_rho = std::min(pa.min_rho, out.rho);
  ++pa.frames;
  if (out.rho < 1.0) ++pa.scaled_frames;
}

std::string rb_context(int l, int b) {
  return "AP " + std::to_string(l) + ", RB " + std::to_string(b);
}

}  // namespace

SnapshotRecord run_snapshot(const SimConfig& cfg, std::uint64_t seed,
                            int snapshot_index, const SnapshotOptions& opts) {
  cfg.validate();
  SnapshotRecord rec;
  rec.snapshot = snapshot_index;
  rec.seed = seed;

  Rng topo_rng = make_stream(seed, {1});
  Rng ls_rng = make_stream(seed, {2});
  const Topology topo = generate_topology(cfg, topo_rng);
  const LargeScale ls = compute_large_scale(topo, cfg, ls_rng);
  const PilotAssignment pilots = assign_pilots(ls, cfg);
  const UserGroups groups = group_users(ls, pilots, cfg, cfg.nu_th);
  const UserGroups papr_groups = group_users(ls, pilots, cfg, cfg.nu_th_papr);
  const EstimationStats stats = cfg.csi == CsiMode::kPerfect
                                    ? EstimationStats{RMatrix::Ones(ls.beta.rows(), ls.beta.cols()),
                                                      ls.beta, ls.beta}
                                    : estimation_stats(ls, pilots, cfg);
  const double eta_max = cfg.eta_max();
  const PowerAllocation power = allocate_power(stats.gamma, eta_max);

  const int L = cfg.num_aps;
  const int K = cfg.num_users;
  const int M = cfg.antennas;
  const int n_sc = cfg.subcarriers_per_rb;
  const int n_sym = cfg.symbols_per_block;
  for (int l = 0; l < L; ++l) rec.tau_s.push_back(groups.tau_s(l));

  const OfdmEngine engine(n_sc, cfg.oversampling);
  std::vector<bool> active(static_cast<std::size_t>(n_sc));
  for (int n = 0; n < n_sc; ++n) active[static_cast<std::size_t>(n)] = cfg.is_active(n);
  std::vector<bool> data_tone = active;
  std::vector<int> reserved;
  const CompensationMethod method = cfg.compensation;
  if (method == CompensationMethod::kToneReservation) {
    reserved = reserved_tones(cfg);
    for (int n : reserved) data_tone[static_cast<std::size_t>(n)] = false;
  }
  const double tr_factor =
      method == CompensationMethod::kToneReservation
          ? tr_threshold(1.0, n_sc, cfg.reserved_tones) : 0.0;
  const double papr_factor = tr_threshold(1.0, n_sc, cfg.num_active());
  std::vector<RVector> sqrt_eta;
  for (int l = 0; l < L; ++l) sqrt_eta.push_back(power.sqrt_eta(l));

  std::vector<double> papr_all;
  std::vector<double> se_sum(static_cast<std::size_t>(K), 0.0);
  std::vector<double> se_ideal_sum(static_cast<std::size_t>(K), 0.0);
  rec.terms.assign(static_cast<std::size_t>(K), TermSummary{});

  for (int b = 0; b < cfg.num_rb; ++b) {
    SinrAccumulator acc(K);
    SinrAccumulator acc_ideal(K);
    for (int r = 0; r < cfg.channel_realizations; ++r) {
      Rng ch_rng = make_stream(seed, {3, std::uint64_t(r), std::uint64_t(b)});
      Rng pilot_rng = make_stream(seed, {4, std::uint64_t(r), std::uint64_t(b)});
      Rng sym_rng = make_stream(seed, {5, std::uint64_t(r), std::uint64_t(b)});
      ChannelSet cs = estimate_channels(draw_channel(ls, cfg, ch_rng), ls, pilots, cfg, pilot_rng);
      cs.rb_index = b;
      const PrecoderSet ps = build_precoders(cfg.precoder, cs, pilots, groups, cfg);
      // Symbols fill every active tone so the ideal reference does not depend
      // on the method; TR then blanks its reserved tones.
      SymbolBlock s = draw_symbols(K, active, n_sym, sym_rng);

      // Effective gain matrices B_l = h_l^H W_l diag(sqrt eta_l), K x K.
      std::vector<CMatrix> gain(static_cast<std::size_t>(L));
      std::vector<std::vector<SymbolGrid>> plain(static_cast<std::size_t>(L));
      std::vector<double> clip(static_cast<std::size_t>(L), 0.0);
      std::vector<std::vector<double>> rho_plain(static_cast<std::size_t>(L));
      for (int l = 0; l < L; ++l) {
        const auto li = static_cast<std::size_t>(l);
        gain[li] = cs.h[li].adjoint() * ps.w[li] * sqrt_eta[li].cast<cplx>().asDiagonal();
        plain[li] = precode_symbols(ps.w[li], sqrt_eta[li], s, active).symbols;
        // Time-domain energy equals frequency-domain energy (unitary DFT).
        double energy = 0.0;
        for (const SymbolGrid& x : plain[li]) {
          const double p = symbol_power(x, active);
          const double rho = p > eta_max ? std::sqrt(eta_max / p) : 1.0;
          rho_plain[li].push_back(rho);
          energy += rho * rho * x.squaredNorm();
        }
        const double rms_a = std::sqrt(energy / (double(M) * engine.fft_size() * n_sym));
        clip[li] = clip_level_for(rms_a, cfg.ibo_db);
      }

      for (int t = 0; t < n_sym; ++t) {
        CMatrix g = CMatrix::Zero(K, K);
        for (int l = 0; l < L; ++l)
          g += rho_plain[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)] *
               gain[static_cast<std::size_t>(l)];
        acc_ideal.add_gain(g);
      }

      if (!reserved.empty()) {
        for (CMatrix& st : s)
          for (int n : reserved) st.col(n).setZero();
        for (int l = 0; l < L; ++l) {
          const auto li = static_cast<std::size_t>(l);
          plain[li] = precode_symbols(ps.w[li], sqrt_eta[li], s, data_tone).symbols;
        }
      }

      // Transmit through the PAs with the configured compensation.
      std::vector<std::vector<PaOutput>> out(static_cast<std::size_t>(L));
      if (method == CompensationMethod::kHwAware) {
        std::vector<ChainAp> chain(static_cast<std::size_t>(L));
        for (int l = 0; l < L; ++l) {
          const auto li = static_cast<std::size_t>(l);
          chain[li].primary = &plain[li];
          chain[li].w_prime = hw_aware_secondary_precoder(ps, cs, ls, pilots, groups, l);
          chain[li].h_hat = cs.h_hat[li];
          chain[li].clip_level = clip[li];
        }
        auto res = sequential_chain_transmit(chain, active, eta_max, engine, opts.chain_mode);
        for (int l = 0; l < L; ++l)
          out[static_cast<std::size_t>(l)] = std::move(res[static_cast<std::size_t>(l)].symbols);
      } else {
        for (int l = 0; l < L; ++l) {
          const auto li = static_cast<std::size_t>(l);
          CMatrix v;
          if (method == CompensationMethod::kPaprAware)
            v = papr_projection_matrix(
                cs.h_bar[li], papr_gamma(papr_groups, l, pilots.tau_p, cfg.gamma_weak),
                rb_context(l, b));
          const bool has_pa = clip[li] > 0.0;
          const LimiterPa pa(has_pa ? clip[li] : 1.0);
          for (int t = 0; t < n_sym; ++t) {
            SymbolGrid x = plain[li][static_cast<std::size_t>(t)];
            if (method == CompensationMethod::kToneReservation)
              tone_reservation(x, reserved, tr_factor, cfg.tr_iterations, engine);
            else if (method == CompensationMethod::kPaprAware)
              papr_aware_precode(x, v, active, papr_factor, cfg.papr_iterations, engine);
            out[li].push_back(transmit_symbol(std::move(x), active, eta_max,
                                              has_pa ? &pa : nullptr, engine));
          }
        }
      }

      for (int t = 0; t < n_sym; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        CMatrix g = CMatrix::Zero(K, K);
        // Everything that is not the budget-scaled primary signal counts as
        // distortion at the users.
        std::vector<SymbolGrid> dist(static_cast<std::size_t>(L));
        for (int l = 0; l < L; ++l) {
          const auto li = static_cast<std::size_t>(l);
          const PaOutput& o = out[li][ti];
          g += o.rho * gain[li];
          dist[li] = o.y - o.rho * plain[li][ti];
          audit(rec.power, o, active, eta_max);
          for (double p : o.papr) {
            rec.papr.add(p);
            papr_all.push_back(p);
          }
        }
        acc.add_gain(g);
        CVector received(K);
        for (int n = 0; n < n_sc; ++n) {
          if (!data_tone[static_cast<std::size_t>(n)]) continue;
          received.setZero();
          for (int l = 0; l < L; ++l) {
            const auto li = static_cast<std::size_t>(l);
            received.noalias() += cs.h[li].adjoint() * dist[li].col(n);
          }
          acc.add_distortion(received);
        }
      }
    }

    const double prelog = method_prelog(cfg);
    for (int k = 0; k < K; ++k) {
      const auto ki = static_cast<std::size_t>(k);
      const SinrBreakdown br = acc.breakdown(k);
      se_sum[ki] += spectral_efficiency(br.sinr, prelog);
      se_ideal_sum[ki] += spectral_efficiency(acc_ideal.breakdown(k).sinr, cfg.prelog());
      rec.terms[ki].cp2 += br.cp * br.cp / cfg.num_rb;
      rec.terms[ki].pu += br.pu / cfg.num_rb;
      rec.terms[ki].ui += br.ui_total() / cfg.num_rb;
      rec.terms[ki].hwi += br.hwi / cfg.num_rb;
      rec.terms[ki].sinr += br.sinr / cfg.num_rb;
    }
  }

  for (int k = 0; k < K; ++k) {
    rec.se.push_back(se_sum[static_cast<std::size_t>(k)] / cfg.num_rb);
    rec.se_ideal.push_back(se_ideal_sum[static_cast<std::size_t>(k)] / cfg.num_rb);
  }
  if (!papr_all.empty()) rec.papr_median = median(papr_all);
  if (opts.papr_samples != nullptr)
    opts.papr_samples->insert(opts.papr_samples->end(), papr_all.begin(), papr_all.end());
  return rec;
}

}  // namespace cfmimo
