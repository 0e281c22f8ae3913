#include <cmath>

#include <gtest/gtest.h>

#include "cfmimo/channel.hpp"
#include "cfmimo/linalg.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/scenario.hpp"
#include "helpers.hpp"

using namespace cfmimo;

namespace {

struct Draw {
  SimConfig cfg;
  LargeScale ls;
  PilotAssignment pilots;
  UserGroups groups;
  ChannelSet cs;
};

Draw make_setup(SimConfig cfg, std::uint64_t seed) {
  Draw s;
  s.cfg = cfg;
  Rng rng(seed);
  const Topology t = generate_topology(cfg, rng);
  s.ls = compute_large_scale(t, cfg, rng);
  s.pilots = assign_pilots(s.ls, cfg);
  s.groups = group_users(s.ls, s.pilots, cfg);
  s.cs = estimate_channels(draw_channel(s.ls, cfg, rng), s.ls, s.pilots, cfg, rng);
  return s;
}

}  // namespace

TEST(Linalg, ZeroForcingBasisMatchesPseudoInverse) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix a = test::random_matrix(6, 3, rng);
    const CMatrix b = zero_forcing_basis(a, "test");
    const CMatrix oracle = test::pinv_oracle(a).adjoint();
    EXPECT_LT(max_abs_diff(b, oracle), 1e-10 * oracle.cwiseAbs().maxCoeff());
    EXPECT_LT(max_abs_diff(a.adjoint() * b, CMatrix::Identity(3, 3)), 1e-10);
  }
}

TEST(Linalg, SingularGramThrowsWithContext) {
  CMatrix a(3, 2);
  a.col(0) << 1, 2, 3;
  a.col(1) = a.col(0) * cplx(0, 2);
  try {
    zero_forcing_basis(a, "AP 3, RB 1");
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("AP 3, RB 1"), std::string::npos);
  }
}

TEST(Precoding, MrUnitNormIdentity) {
  SimConfig c = test::tiny_config();
  c.num_aps = 1;
  c.num_users = 1;
  Draw s = make_setup(c, 2);
  const double theta = s.cs.stats.theta(0, 0);
  s.cs.h_hat[0].setZero();
  s.cs.h_hat[0](0, 0) = std::sqrt(c.antennas * theta);
  const PrecoderSet ps = mr_precoder(s.cs, c);
  EXPECT_NEAR(std::abs(ps.w[0](0, 0) - 1.0), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(ps.w[0].col(0).squaredNorm(), 1.0);
}

TEST(Precoding, ZeroEstimateGivesZeroColumn) {
  SimConfig c = test::tiny_config();
  Draw s = make_setup(c, 3);
  s.cs.stats.theta(1, 0) = 0.0;
  const PrecoderSet ps = mr_precoder(s.cs, c);
  EXPECT_TRUE(ps.w[1].col(0).isZero(0.0));
  EXPECT_TRUE(ps.unserved[1][0]);
  EXPECT_FALSE(ps.unserved[0][0]);
}

TEST(Precoding, FzfMatchesPseudoInverseOracle) {
  SimConfig c = test::tiny_config();
  c.precoder = PrecoderScheme::kFzf;
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const Draw s = make_setup(c, seed);
    const PrecoderSet ps = fzf_precoder(s.cs, s.pilots, c);
    for (int l = 0; l < c.num_aps; ++l) {
      const CMatrix dir = test::pinv_oracle(s.cs.h_bar[l]).adjoint();
      for (int k = 0; k < c.num_users; ++k) {
        const double theta = s.cs.stats.theta(l, k);
        const double cc = s.cs.stats.c(l, k);
        const CVector expect =
            std::sqrt((c.antennas - c.pilot_length) * theta) / cc * dir.col(s.pilots.pilot_index[k]);
        EXPECT_LT((ps.w[l].col(k) - expect).norm(), 1e-10 * expect.norm());
        EXPECT_DOUBLE_EQ(ps.norm(l, k), std::sqrt((c.antennas - c.pilot_length) * theta) / cc);
      }
    }
  }
}

TEST(Precoding, FzfZeroForces) {
  SimConfig c = test::tiny_config();
  c.num_users = 3;
  c.pilot_length = 3;
  c.antennas = 6;
  const Draw s = make_setup(c, 21);
  const PrecoderSet ps = fzf_precoder(s.cs, s.pilots, c);
  for (int l = 0; l < c.num_aps; ++l)
    for (int k = 0; k < 3; ++k)
      for (int t = 0; t < 3; ++t) {
        if (t == k) continue;
        const double leak = std::abs(s.cs.h_hat[l].col(k).dot(ps.w[l].col(t)));
        EXPECT_LT(leak, 1e-9 * s.cs.h_hat[l].col(k).norm() * ps.w[l].col(t).norm());
      }
}

TEST(Precoding, FzfSinglePilotIsMrDirection) {
  SimConfig c = test::tiny_config();
  c.num_users = 1;
  c.pilot_length = 1;
  const Draw s = make_setup(c, 22);
  const PrecoderSet z = fzf_precoder(s.cs, s.pilots, c);
  const PrecoderSet m = mr_precoder(s.cs, c);
  for (int l = 0; l < c.num_aps; ++l) {
    const CVector a = z.w[l].col(0).normalized();
    const CVector b = m.w[l].col(0).normalized();
    EXPECT_LT((a - b).norm(), 1e-12);
  }
}

TEST(Precoding, FzfRequiresMoreAntennasThanPilots) {
  SimConfig c = test::tiny_config();
  Draw s = make_setup(c, 23);
  c.antennas = 2;
  EXPECT_THROW(fzf_precoder(s.cs, s.pilots, c), Error);
}

TEST(Precoding, PzfFullThresholdEqualsFzf) {
  SimConfig c;
  c.num_aps = 4;
  c.nu_th = 100.0;
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    const Draw s = make_setup(c, seed);
    const PrecoderSet a = pzf_precoder(s.cs, s.pilots, s.groups, c);
    const PrecoderSet b = fzf_precoder(s.cs, s.pilots, c);
    for (int l = 0; l < c.num_aps; ++l) EXPECT_LE(max_abs_diff(a.w[l], b.w[l]), 1e-12);
  }
}

TEST(Precoding, PzfStrongUsersZeroForcedWeakUsersMr) {
  SimConfig c;
  c.num_aps = 4;
  c.nu_th = 90.0;
  const Draw s = make_setup(c, 41);
  const PrecoderSet ps = pzf_precoder(s.cs, s.pilots, s.groups, c);
  const PrecoderSet mr = mr_precoder(s.cs, c);
  for (int l = 0; l < c.num_aps; ++l) {
    for (int k : s.groups.strong[l])
      for (int t : s.groups.strong[l]) {
        if (s.pilots.shares_pilot(k, t)) continue;
        const double leak = std::abs(s.cs.h_hat[l].col(k).dot(ps.w[l].col(t)));
        EXPECT_LT(leak, 1e-9 * s.cs.h_hat[l].col(k).norm() * ps.w[l].col(t).norm());
      }
    for (int k : s.groups.weak[l])
      EXPECT_LE(max_abs_diff(ps.w[l].col(k), mr.w[l].col(k)), 1e-15);
  }
}

TEST(Precoding, EmptyStrongSetIsMr) {
  SimConfig c = test::tiny_config();
  Draw s = make_setup(c, 42);
  for (int l = 0; l < c.num_aps; ++l) {
    s.groups.weak[l] = {0, 1};
    s.groups.strong[l].clear();
    s.groups.strong_pilots[l].clear();
    s.groups.selection[l] = {-1, -1};
  }
  const PrecoderSet ps = pzf_precoder(s.cs, s.pilots, s.groups, c);
  const PrecoderSet mr = mr_precoder(s.cs, c);
  for (int l = 0; l < c.num_aps; ++l) EXPECT_LE(max_abs_diff(ps.w[l], mr.w[l]), 1e-15);
}

TEST(Precoding, ScaleCovariance) {
  SimConfig c = test::tiny_config();
  Draw s = make_setup(c, 43);
  const PrecoderSet a = fzf_precoder(s.cs, s.pilots, c);
  s.cs.h_bar[0] *= cplx(3.0, -1.5);
  for (int k = 0; k < c.num_users; ++k) s.cs.h_hat[0].col(k) *= cplx(3.0, -1.5);
  const PrecoderSet b = fzf_precoder(s.cs, s.pilots, c);
  for (int k = 0; k < c.num_users; ++k) {
    const CVector u = a.w[0].col(k).normalized();
    const CVector v = b.w[0].col(k).normalized();
    EXPECT_NEAR(std::abs(u.dot(v)), 1.0, 1e-12);
  }
}

TEST(Precoding, MrAverageNormIsOne) {
  SimConfig c = test::tiny_config();
  c.num_aps = 1;
  c.num_users = 1;
  c.ul_power_dbm = c.noise_dbm + 5.0;
  LargeScale ls;
  ls.beta = RMatrix::Constant(1, 1, 0.8);
  const PilotAssignment p = assign_pilots(ls, c);
  Rng rng(44);
  double acc = 0.0;
  const int draws = 25000;  // 4 antennas each: 1e5 entries
  for (int i = 0; i < draws; ++i) {
    const ChannelSet cs = estimate_channels(draw_channel(ls, c, rng), ls, p, c, rng);
    acc += mr_precoder(cs, c).w[0].col(0).squaredNorm();
  }
  EXPECT_NEAR(acc / draws, 1.0, 0.02);
}

TEST(Precoding, PrecodeSymbolsExample) {
  CMatrix w = CMatrix::Zero(3, 1);
  w(0, 0) = 1.0;
  RVector eta(1);
  eta << 2.0;  // sqrt(4)
  std::vector<bool> data = {false, true, true, false};
  SymbolBlock s = {CMatrix::Ones(1, 4)};
  const Frame f = precode_symbols(w, eta, s, data);
  ASSERT_EQ(f.symbols.size(), 1u);
  EXPECT_EQ(f.symbols[0](0, 1), cplx(2.0, 0.0));
  EXPECT_EQ(f.symbols[0](0, 2), cplx(2.0, 0.0));
  EXPECT_TRUE(f.symbols[0].col(0).isZero(0.0));
  EXPECT_TRUE(f.symbols[0].col(3).isZero(0.0));
  EXPECT_TRUE(f.symbols[0].row(1).isZero(0.0));
}

TEST(Precoding, AverageTransmitPowerIsBudget) {
  SimConfig c;
  c.num_aps = 1;
  c.num_users = 4;
  c.pilot_length = 4;
  c.precoder = PrecoderScheme::kMr;
  const double eta_max = 5.0;
  LargeScale ls;
  ls.beta.resize(1, 4);
  ls.beta << 1.0, 0.5, 0.2, 0.05;
  const PilotAssignment p = assign_pilots(ls, c);
  const EstimationStats st = estimation_stats(ls, p, c);
  const PowerAllocation pw = allocate_power(st.gamma, eta_max);
  std::vector<bool> active(64);
  for (int n = 0; n < 64; ++n) active[n] = c.is_active(n);
  Rng rng(45);
  double acc = 0.0;
  long count = 0;
  for (int r = 0; r < 2000; ++r) {
    const ChannelSet cs = estimate_channels(draw_channel(ls, c, rng), ls, p, c, rng);
    const PrecoderSet ps = mr_precoder(cs, c);
    const SymbolBlock s = draw_symbols(4, active, 1, rng);
    const Frame f = precode_symbols(ps.w[0], pw.sqrt_eta(0), s, active);
    for (int n = 0; n < 64; ++n) {
      if (!active[n]) {
        EXPECT_TRUE(f.symbols[0].col(n).isZero(0.0));
        continue;
      }
      acc += f.symbols[0].col(n).squaredNorm();
      ++count;
    }
  }
  EXPECT_NEAR(acc / count / eta_max, 1.0, 0.02);
}

TEST(Precoding, QpskSymbolsAreUnitPower) {
  std::vector<bool> data(8, true);
  data[0] = false;
  Rng rng(46);
  const SymbolBlock s = draw_symbols(3, data, 2, rng);
  ASSERT_EQ(s.size(), 2u);
  for (const CMatrix& m : s) {
    EXPECT_TRUE(m.col(0).isZero(0.0));
    for (int n = 1; n < 8; ++n)
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(std::norm(m(k, n)), 1.0, 1e-15);
  }
}
