// Command-line front end: campaigns, single snapshots, complexity tables and
// the invariant suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cfmimo/campaign.hpp"
#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/hwi_compensation.hpp"
#include "cfmimo/metrics.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/scenario.hpp"
#include "cfmimo/simulation.hpp"

namespace {

using namespace cfmimo;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitFailures = 2;

struct CommonArgs {
  std::string config_path;
  std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--seed", args.seed, "Master seed");
  cmd->allow_extras();
}

/// Base config, then --key=value overrides from the unparsed arguments, then
/// --seed.
SimConfig resolve_config(CLI::App* cmd, const CommonArgs& args) {
  SimConfig cfg = args.config_path.empty() ? SimConfig{} : load_config(args.config_path);
  for (const std::string& extra : cmd->remaining()) {
    std::string s = extra;
    if (s.rfind("--", 0) == 0) s = s.substr(2);
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("unrecognised argument '" + extra + "' (overrides are --key=value)");
    set_config_field(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  cfg.validate();
  return cfg;
}

int cmd_run(CLI::App* cmd, const CommonArgs& common, const std::vector<std::string>& sweeps,
            const std::string& out, int jobs, bool no_resume, bool pipelined) {
  Campaign c;
  c.base = resolve_config(cmd, common);
  for (const auto& s : sweeps) c.axes.push_back(parse_sweep(s));
  c.out_dir = out;
  c.jobs = jobs;
  c.resume = !no_resume;
  c.chain_mode = pipelined ? ChainMode::kPipelined : ChainMode::kSerial;
  const auto cells = enumerate_cells(c);
  std::fprintf(stderr, "campaign: %zu cells x %d snapshots, %d job(s) -> %s\n", cells.size(),
               c.base.snapshots, jobs, out.c_str());
  const ResultSet rs = run_campaign(c, [](const CellResult& cell) {
    if (!cell.ok()) {
      std::fprintf(stderr, "  cell %d FAILED: %s\n", cell.spec.id, cell.error.c_str());
      return;
    }
    std::fprintf(stderr, "  cell %d [%s] median SE %.4f (ideal %.4f)%s %.1fs\n", cell.spec.id,
                 cell.spec.key.c_str(), median(cell.se_samples()),
                 median(cell.se_ideal_samples()), cell.resumed ? " (resumed)" : "",
                 cell.wall_seconds);
  });
  export_results(rs, out);
  if (rs.failures() > 0) {
    std::fprintf(stderr, "%d cell(s) failed\n", rs.failures());
    return kExitFailures;
  }
  return kExitOk;
}

int cmd_snapshot(CLI::App* cmd, const CommonArgs& common, int index,
                 const std::string& dump_channels) {
  const SimConfig cfg = resolve_config(cmd, common);
  const std::uint64_t seed = snapshot_seed(cfg, index);
  const SnapshotRecord rec = run_snapshot(cfg, seed, index);
  std::printf("method %s, precoder %s, IBO %.2f dB, seed %llu\n",
              to_string(cfg.compensation).c_str(), to_string(cfg.precoder).c_str(), cfg.ibo_db,
              static_cast<unsigned long long>(seed));
  std::printf("%4s %10s %10s %12s %12s %12s %12s %10s\n", "user", "SE", "SE_ideal", "|CP|^2",
              "PU", "UI", "HWI", "SINR_dB");
  for (std::size_t k = 0; k < rec.se.size(); ++k) {
    const auto& t = rec.terms[k];
    std::printf("%4zu %10.4f %10.4f %12.4g %12.4g %12.4g %12.4g %10.2f\n", k, rec.se[k],
                rec.se_ideal[k], t.cp2, t.pu, t.ui, t.hwi, 10.0 * std::log10(t.sinr));
  }
  std::printf("PAPR median %.2f dB, 1e-2 CCDF point %.2f dB\n", rec.papr_median,
              rec.papr.count() ? rec.papr.ccdf_point(1e-2) : 0.0);
  std::printf("power: max P/eta_max %.12f, guard %.3g, min rho %.4f, scaled %llu/%llu\n",
              rec.power.max_power_ratio, rec.power.max_guard_power, rec.power.min_rho,
              static_cast<unsigned long long>(rec.power.scaled_frames),
              static_cast<unsigned long long>(rec.power.frames));
  std::printf("strong-set sizes:");
  for (int t : rec.tau_s) std::printf(" %d", t);
  std::printf("\n");

  if (!dump_channels.empty()) {
    Rng topo_rng = make_stream(seed, {1});
    Rng ls_rng = make_stream(seed, {2});
    const Topology topo = generate_topology(cfg, topo_rng);
    const LargeScale ls = compute_large_scale(topo, cfg, ls_rng);
    const PilotAssignment pilots = assign_pilots(ls, cfg);
    Rng ch_rng = make_stream(seed, {3, 0, 0});
    Rng pilot_rng = make_stream(seed, {4, 0, 0});
    const ChannelSet cs = estimate_channels(draw_channel(ls, cfg, ch_rng), ls, pilots, cfg, pilot_rng);
    std::ofstream out(dump_channels);
    if (!out) throw Error("cannot write " + dump_channels);
    cfmimo::dump_channels(out, cs);
  }
  return kExitOk;
}

int cmd_complexity(const ComplexityParams& p, const std::string& convention, bool as_json) {
  const ComplexityConvention conv = parse_complexity_convention(convention);
  nlohmann::ordered_json j;
  double counts[4];
  const char* names[4] = {"pzf", "tr", "papr_aware", "hw_aware"};
  for (int i = 0; i < 4; ++i) {
    counts[i] = complexity_count(names[i], p, conv).multiplications;
    j[names[i]] = counts[i];
  }
  const double vs_papr = 1.0 - counts[3] / counts[2];
  const double vs_tr = 1.0 - counts[3] / counts[1];
  j["hw_reduction_vs_papr_aware"] = vs_papr;
  j["hw_reduction_vs_tr"] = vs_tr;
  if (as_json) {
    std::cout << j.dump(2) << '\n';
    return kExitOk;
  }
  std::printf("convention %s: M=%d K=%d tau_s=%d |Xi|=%d N_s=%d N_it_tr=%d N_it_papr=%d\n",
              convention.c_str(), p.M, p.K, p.tau_s, p.active, p.symbols, p.tr_iterations,
              p.papr_iterations);
  for (int i = 0; i < 4; ++i) std::printf("  %-11s %14.0f\n", names[i], counts[i]);
  std::printf("  hw_aware reduction: %.1f%% vs papr_aware, %.1f%% vs tr\n", 100 * vs_papr,
              100 * vs_tr);
  return kExitOk;
}

bool check(bool ok, const std::string& what) {
  std::printf("%s %s\n", ok ? "ok  " : "FAIL", what.c_str());
  return ok;
}

int cmd_validate(CLI::App* cmd, const CommonArgs& common, const std::string& results) {
  SimConfig cfg = resolve_config(cmd, common);
  bool ok = true;

  // Scenario invariants on one draw.
  const std::uint64_t seed = snapshot_seed(cfg, 0);
  Rng topo_rng = make_stream(seed, {1});
  Rng ls_rng = make_stream(seed, {2});
  const Topology topo = generate_topology(cfg, topo_rng);
  const LargeScale ls = compute_large_scale(topo, cfg, ls_rng);
  const PilotAssignment pilots = assign_pilots(ls, cfg);
  const UserGroups groups = group_users(ls, pilots, cfg);
  bool closed = true;
  bool capped = true;
  for (int l = 0; l < cfg.num_aps; ++l) {
    capped &= groups.tau_s(l) <= std::min(cfg.antennas, cfg.pilot_length + 1);
    for (int k : groups.strong[static_cast<std::size_t>(l)])
      for (int t : pilots.coset[static_cast<std::size_t>(k)]) closed &= groups.is_strong(l, t);
  }
  ok &= check(closed, "grouping closed under pilot cosets");
  ok &= check(capped, "strong sets within min(M, tau_p + 1)");
  const PowerAllocation pw = allocate_power(estimation_stats(ls, pilots, cfg).gamma, cfg.eta_max());
  double worst = 0.0;
  for (int l = 0; l < cfg.num_aps; ++l)
    worst = std::max(worst, std::abs(pw.eta.row(l).sum() / cfg.eta_max() - 1.0));
  ok &= check(worst < 1e-12, "per-AP allocation sums to eta_max");

  // Power budget for every method on a reduced snapshot.
  SimConfig small = cfg;
  small.channel_realizations = std::min(cfg.channel_realizations, 3);
  small.num_rb = 1;
  small.total_subcarriers = small.subcarriers_per_rb;
  for (auto m : {CompensationMethod::kNone, CompensationMethod::kToneReservation,
                 CompensationMethod::kPaprAware, CompensationMethod::kHwAware}) {
    small.compensation = m;
    const SnapshotRecord rec = run_snapshot(small, seed, 0);
    char line[160];
    std::snprintf(line, sizeof line, "%s: max P/eta_max = %.15f, guard power = %g",
                  to_string(m).c_str(), rec.power.max_power_ratio, rec.power.max_guard_power);
    ok &= check(rec.power.within_budget(), line);
  }

  if (!results.empty()) {
    const auto path = std::filesystem::path(results) / "summary.json";
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    const auto j = nlohmann::json::parse(in);
    for (const auto& cell : j.at("cells")) {
      const auto& p = cell.at("power");
      ok &= check(p.at("within_budget").get<bool>(),
                  "campaign cell " + std::to_string(cell.at("cell_id").get<int>()) + " [" +
                      cell.at("key").get<std::string>() + "] within budget");
    }
    ok &= check(j.at("failures").empty(), "campaign has no failed cells");
  }
  return ok ? kExitOk : kExitFailures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free massive MIMO OFDM downlink simulator with PA clipping"};
  app.require_subcommand(1);

  CommonArgs run_args, snap_args, val_args;
  std::vector<std::string> sweeps;
  std::string out_dir = "results";
  int jobs = 1;
  bool no_resume = false;
  bool pipelined = false;
  auto* run = app.add_subcommand("run", "Run a campaign over the sweep axes");
  add_common(run, run_args);
  run->add_option("--sweep", sweeps, "Sweep axis key=v1,v2 (repeatable)");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--no-resume", no_resume, "Recompute cells that already have results");
  run->add_flag("--pipelined", pipelined, "Run the fronthaul chain one thread per AP");

  int snap_index = 0;
  std::string dump;
  auto* snap = app.add_subcommand("snapshot", "Run one snapshot and print its breakdown");
  add_common(snap, snap_args);
  snap->add_option("--index", snap_index, "Snapshot index");
  snap->add_option("--dump-channels", dump, "Write h and h_hat of RB 0 to this CSV");

  ComplexityParams cp;
  std::string convention = "per_symbol";
  bool as_json = false;
  auto* cx = app.add_subcommand("complexity", "Evaluate the complexity model");
  cx->add_option("--M", cp.M);
  cx->add_option("--K", cp.K);
  cx->add_option("--tau_s", cp.tau_s);
  cx->add_option("--active", cp.active, "|Xi|");
  cx->add_option("--N_s", cp.symbols);
  cx->add_option("--N_it_tr", cp.tr_iterations);
  cx->add_option("--N_it_papr", cp.papr_iterations);
  cx->add_option("--convention", convention, "table or per_symbol");
  cx->add_flag("--json", as_json);

  std::string results;
  auto* val = app.add_subcommand("validate", "Check invariants and power budgets");
  add_common(val, val_args);
  val->add_option("--out", results, "Campaign directory whose summary is audited");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run, run_args, sweeps, out_dir, jobs, no_resume, pipelined);
    if (*snap) return cmd_snapshot(snap, snap_args, snap_index, dump);
    if (*cx) return cmd_complexity(cp, convention, as_json);
    if (*val) return cmd_validate(val, val_args, results);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailures;
  }
  return kExitOk;
}
