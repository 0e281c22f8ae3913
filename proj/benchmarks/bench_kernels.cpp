#include <benchmark/benchmark.h>

#include "cfmimo/channel.hpp"
#include "cfmimo/hwi_compensation.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/rf_frontend.hpp"
#include "cfmimo/scenario.hpp"
#include "cfmimo/simulation.hpp"

using namespace cfmimo;

namespace {

SymbolGrid random_grid(int rows, int cols, Rng& rng) {
  SymbolGrid x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = complex_gaussian(rng);
  return x;
}

std::vector<bool> active_mask(const SimConfig& c) {
  std::vector<bool> a(static_cast<std::size_t>(c.subcarriers_per_rb));
  for (int n = 0; n < c.subcarriers_per_rb; ++n) a[static_cast<std::size_t>(n)] = c.is_active(n);
  return a;
}

void BM_Modulate(benchmark::State& st) {
  const OfdmEngine e(64, static_cast<int>(st.range(0)));
  Rng rng(1);
  const SymbolGrid x = random_grid(8, 64, rng);
  SymbolGrid a;
  for (auto _ : st) {
    e.modulate(x, a);
    benchmark::DoNotOptimize(a.data());
  }
}
BENCHMARK(BM_Modulate)->Arg(1)->Arg(4);

void BM_PzfPrecoder(benchmark::State& st) {
  SimConfig c;
  Rng rng(2);
  const LargeScale ls = compute_large_scale(generate_topology(c, rng), c, rng);
  const PilotAssignment p = assign_pilots(ls, c);
  const UserGroups g = group_users(ls, p, c);
  const ChannelSet cs = estimate_channels(draw_channel(ls, c, rng), ls, p, c, rng);
  for (auto _ : st) benchmark::DoNotOptimize(pzf_precoder(cs, p, g, c).w.data());
}
BENCHMARK(BM_PzfPrecoder);

void BM_ToneReservation(benchmark::State& st) {
  SimConfig c;
  const auto r = reserved_tones(c);
  const OfdmEngine e(64);
  Rng rng(3);
  SymbolGrid x0 = random_grid(8, 64, rng);
  for (int n : r) x0.col(n).setZero();
  const double f = tr_threshold(1.0, 64, c.reserved_tones);
  for (auto _ : st) {
    SymbolGrid x = x0;
    tone_reservation(x, r, f, c.tr_iterations, e);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_ToneReservation);

void BM_PaprAware(benchmark::State& st) {
  SimConfig c;
  const auto act = active_mask(c);
  const OfdmEngine e(64);
  Rng rng(4);
  const CMatrix hb = random_grid(8, 7, rng);
  RVector g = RVector::Ones(7);
  g.head(4).setZero();
  const CMatrix v = papr_projection_matrix(hb, g, "bench");
  const SymbolGrid x0 = random_grid(8, 64, rng);
  const double f = tr_threshold(1.0, 64, c.num_active());
  for (auto _ : st) {
    SymbolGrid x = x0;
    papr_aware_precode(x, v, act, f, c.papr_iterations, e);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_PaprAware);

void BM_Chain(benchmark::State& st) {
  SimConfig c;
  const auto act = active_mask(c);
  const OfdmEngine e(64);
  Rng rng(5);
  std::vector<std::vector<SymbolGrid>> prim(8);
  std::vector<ChainAp> aps(8);
  for (int l = 0; l < 8; ++l) {
    for (int t = 0; t < c.symbols_per_block; ++t) {
      SymbolGrid x = random_grid(8, 64, rng);
      for (int n = 0; n < 64; ++n)
        if (!act[static_cast<std::size_t>(n)]) x.col(n).setZero();
      prim[l].push_back(x);
    }
    aps[l].primary = &prim[l];
    aps[l].w_prime = 0.05 * CMatrix(random_grid(8, 7, rng));
    aps[l].h_hat = random_grid(8, 7, rng);
    aps[l].clip_level = 1.2;
  }
  const auto mode = st.range(0) ? ChainMode::kPipelined : ChainMode::kSerial;
  for (auto _ : st)
    benchmark::DoNotOptimize(sequential_chain_transmit(aps, act, 1e9, e, mode).data());
}
BENCHMARK(BM_Chain)->Arg(0)->Arg(1);

void BM_Snapshot(benchmark::State& st) {
  SimConfig c;
  c.num_rb = 1;
  c.total_subcarriers = c.subcarriers_per_rb;
  c.channel_realizations = 2;
  c.compensation = static_cast<CompensationMethod>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(run_snapshot(c, 42).se.data());
}
BENCHMARK(BM_Snapshot)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
