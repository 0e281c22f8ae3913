#include "cfmimo/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cfmimo/rng.hpp"

namespace cfmimo {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

SweepAxis parse_sweep(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("sweep '" + spec + "' is not of the form key=v1,v2");
  SweepAxis axis;
  axis.key = spec.substr(0, eq);
  std::stringstream ss(spec.substr(eq + 1));
  std::string v;
  while (std::getline(ss, v, ','))
    if (!v.empty()) axis.values.push_back(v);
  return axis;
}

std::vector<CellSpec> enumerate_cells(const Campaign& c) {
  std::size_t total = 1;
  for (const auto& a : c.axes) {
    if (a.values.empty()) throw ConfigError("sweep axis '" + a.key + "' has no values");
    total *= a.values.size();
  }
  std::vector<CellSpec> cells;
  cells.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    CellSpec cell;
    cell.id = static_cast<int>(idx);
    cell.cfg = c.base;
    std::size_t rem = idx;
    std::vector<std::size_t> pick(c.axes.size());
    for (std::size_t a = c.axes.size(); a-- > 0;) {
      pick[a] = rem % c.axes[a].values.size();
      rem /= c.axes[a].values.size();
    }
    for (std::size_t a = 0; a < c.axes.size(); ++a) {
      const auto& axis = c.axes[a];
      const auto& v = axis.values[pick[a]];
      set_config_field(cell.cfg, axis.key, v);
      cell.assignment.emplace_back(axis.key, v);
      if (!cell.key.empty()) cell.key += ';';
      cell.key += axis.key + '=' + v;
    }
    try {
      cell.cfg.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("cell " + std::to_string(idx) + " (" + cell.key + "): " + e.what());
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

const std::vector<std::string>& hardware_keys() {
  static const std::vector<std::string> keys = {
      "IBO", "compensation_method", "precoder", "N_TR", "N_it_tr",
      "N_it_papr", "nu_th_papr", "gamma_weak", "oversampling"};
  return keys;
}

std::string scenario_key(const SimConfig& cfg) {
  ordered_json j = to_json(cfg);
  for (const auto& k : hardware_keys()) j.erase(k);
  j.erase("seed");
  return j.dump();
}

std::uint64_t snapshot_seed(const SimConfig& cfg, int index) {
  return derive_seed(cfg.seed, scenario_key(cfg), static_cast<std::uint64_t>(index));
}

std::vector<double> CellResult::se_samples() const {
  std::vector<double> v;
  for (const auto& s : snapshots) v.insert(v.end(), s.se.begin(), s.se.end());
  return v;
}

std::vector<double> CellResult::se_ideal_samples() const {
  std::vector<double> v;
  for (const auto& s : snapshots) v.insert(v.end(), s.se_ideal.begin(), s.se_ideal.end());
  return v;
}

Histogram CellResult::papr() const {
  Histogram h;
  for (const auto& s : snapshots) h.merge(s.papr);
  return h;
}

PowerAudit CellResult::power() const {
  PowerAudit p;
  for (const auto& s : snapshots) p.merge(s.power);
  return p;
}

double CellResult::mean_tau_s() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : snapshots)
    for (int t : s.tau_s) {
      sum += t;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

int ResultSet::failures() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(),
                                        [](const CellResult& c) { return !c.ok(); }));
}

void write_file_atomic(const fs::path& path, const std::string& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << data;
    out.flush();
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

ordered_json snapshot_to_json(const SnapshotRecord& s) {
  ordered_json j;
  j["snapshot"] = s.snapshot;
  j["seed"] = s.seed;
  j["se"] = s.se;
  j["se_ideal"] = s.se_ideal;
  j["papr_median"] = s.papr_median;
  j["papr_zero_rows"] = s.papr_zero_rows;
  j["papr_bins"] = s.papr.bins();
  j["tau_s"] = s.tau_s;
  j["power"] = {{"max_power_ratio", s.power.max_power_ratio},
                {"max_guard_power", s.power.max_guard_power},
                {"min_rho", s.power.min_rho},
                {"frames", s.power.frames},
                {"scaled_frames", s.power.scaled_frames}};
  ordered_json terms = ordered_json::array();
  for (const auto& t : s.terms)
    terms.push_back({{"cp2", t.cp2}, {"pu", t.pu}, {"ui", t.ui}, {"hwi", t.hwi}, {"sinr", t.sinr}});
  j["terms"] = terms;
  return j;
}

SnapshotRecord snapshot_from_json(const json& j) {
  SnapshotRecord s;
  s.snapshot = j.at("snapshot").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.se = j.at("se").get<std::vector<double>>();
  s.se_ideal = j.at("se_ideal").get<std::vector<double>>();
  s.papr_median = j.at("papr_median").get<double>();
  s.papr_zero_rows = j.at("papr_zero_rows").get<int>();
  s.papr.set_bins(j.at("papr_bins").get<std::vector<std::uint64_t>>());
  s.tau_s = j.at("tau_s").get<std::vector<int>>();
  const auto& p = j.at("power");
  s.power.max_power_ratio = p.at("max_power_ratio").get<double>();
  s.power.max_guard_power = p.at("max_guard_power").get<double>();
  s.power.min_rho = p.at("min_rho").get<double>();
  s.power.frames = p.at("frames").get<std::uint64_t>();
  s.power.scaled_frames = p.at("scaled_frames").get<std::uint64_t>();
  for (const auto& t : j.at("terms"))
    s.terms.push_back({t.at("cp2").get<double>(), t.at("pu").get<double>(),
                       t.at("ui").get<double>(), t.at("hwi").get<double>(),
                       t.at("sinr").get<double>()});
  return s;
}

fs::path cell_path(const fs::path& dir, int id) {
  char name[32];
  std::snprintf(name, sizeof name, "cell_%04d.json", id);
  return dir / "cells" / name;
}

bool try_resume(const fs::path& path, CellResult& cell) {
  if (!fs::exists(path)) return false;
  try {
    std::ifstream in(path);
    const json j = json::parse(in);
    CellResult old = cell_from_json(j);
    if (old.spec.key != cell.spec.key || to_json(old.spec.cfg) != to_json(cell.spec.cfg) ||
        !old.ok() || static_cast<int>(old.snapshots.size()) != cell.spec.cfg.snapshots)
      return false;
    old.spec.id = cell.spec.id;
    old.spec.assignment = cell.spec.assignment;
    cell = std::move(old);
    cell.resumed = true;
    return true;
  } catch (const std::exception&) {
    return false;  // unreadable or partial file: recompute
  }
}

}  // namespace

ordered_json cell_to_json(const CellResult& cell) {
  ordered_json j;
  j["id"] = cell.spec.id;
  j["key"] = cell.spec.key;
  ordered_json a = ordered_json::object();
  for (const auto& [k, v] : cell.spec.assignment) a[k] = v;
  j["assignment"] = a;
  j["config"] = to_json(cell.spec.cfg);
  j["wall_seconds"] = cell.wall_seconds;
  j["error"] = cell.error;
  ordered_json snaps = ordered_json::array();
  for (const auto& s : cell.snapshots) snaps.push_back(snapshot_to_json(s));
  j["snapshots"] = snaps;
  return j;
}

CellResult cell_from_json(const json& j) {
  CellResult c;
  c.spec.id = j.at("id").get<int>();
  c.spec.key = j.at("key").get<std::string>();
  for (const auto& [k, v] : j.at("assignment").items())
    c.spec.assignment.emplace_back(k, v.get<std::string>());
  c.spec.cfg = config_from_json(j.at("config"));
  c.wall_seconds = j.at("wall_seconds").get<double>();
  c.error = j.at("error").get<std::string>();
  for (const auto& s : j.at("snapshots")) c.snapshots.push_back(snapshot_from_json(s));
  return c;
}

ResultSet run_campaign(const Campaign& c,
                       const std::function<void(const CellResult&)>& on_cell) {
  ResultSet rs;
  for (auto& spec : enumerate_cells(c)) {
    CellResult cell;
    cell.spec = std::move(spec);
    rs.cells.push_back(std::move(cell));
  }
  const bool persist = !c.out_dir.empty();

  struct Task {
    std::size_t cell;
    int snapshot;
  };
  std::vector<Task> tasks;
  std::vector<int> remaining(rs.cells.size(), 0);
  std::vector<double> seconds(rs.cells.size(), 0.0);
  std::vector<bool> done(rs.cells.size(), false);
  for (std::size_t i = 0; i < rs.cells.size(); ++i) {
    CellResult& cell = rs.cells[i];
    if (persist && c.resume && try_resume(cell_path(c.out_dir, cell.spec.id), cell)) {
      done[i] = true;
      continue;
    }
    const int n = cell.spec.cfg.snapshots;
    cell.snapshots.resize(static_cast<std::size_t>(n));
    remaining[i] = n;
    for (int s = 0; s < n; ++s) tasks.push_back({i, s});
  }

  std::mutex mu;
  std::size_t next_emit = 0;
  auto emit_ready = [&] {
    while (next_emit < rs.cells.size() && done[next_emit]) {
      if (on_cell) on_cell(rs.cells[next_emit]);
      ++next_emit;
    }
  };
  {
    std::lock_guard<std::mutex> lock(mu);
    emit_ready();
  }

  std::atomic<std::size_t> next{0};
  SnapshotOptions opts;
  opts.chain_mode = c.chain_mode;
  auto worker = [&] {
    for (;;) {
      const std::size_t ti = next.fetch_add(1);
      if (ti >= tasks.size()) return;
      const Task task = tasks[ti];
      CellResult& cell = rs.cells[task.cell];
      const auto t0 = std::chrono::steady_clock::now();
      std::string err;
      SnapshotRecord rec;
      try {
        rec = run_snapshot(cell.spec.cfg, snapshot_seed(cell.spec.cfg, task.snapshot),
                           task.snapshot, opts);
      } catch (const std::exception& e) {
        err = "cell " + std::to_string(cell.spec.id) + " (" + cell.spec.key +
              ") snapshot " + std::to_string(task.snapshot) + ": " + e.what();
      }
      const double dt =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::lock_guard<std::mutex> lock(mu);
      cell.snapshots[static_cast<std::size_t>(task.snapshot)] = std::move(rec);
      seconds[task.cell] += dt;
      if (!err.empty() && cell.error.empty()) cell.error = err;
      if (--remaining[task.cell] == 0) {
        cell.wall_seconds = seconds[task.cell];
        if (persist && cell.ok()) {
          try {
            write_file_atomic(cell_path(c.out_dir, cell.spec.id), cell_to_json(cell).dump(1));
          } catch (const std::exception& e) {
            cell.error = std::string("persisting cell failed: ") + e.what();
          }
        }
        done[task.cell] = true;
        emit_ready();
      }
    }
  };

  const int jobs = std::max(1, c.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rs;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

void write_samples_csv(const ResultSet& rs, const fs::path& path, bool ideal) {
  std::string out =
      "cell_id,method,precoder,ibo_db,M,K,L,snapshot,user,se_bit_s_hz,papr_db_median\n";
  for (const auto& cell : rs.cells) {
    if (!cell.ok()) continue;
    const SimConfig& cfg = cell.spec.cfg;
    const std::string method = ideal ? "ideal" : to_string(cfg.compensation);
    const std::string prefix = std::to_string(cell.spec.id) + ',' + csv_escape(method) + ',' +
                               to_string(cfg.precoder) + ',' + num(cfg.ibo_db) + ',' +
                               std::to_string(cfg.antennas) + ',' +
                               std::to_string(cfg.num_users) + ',' +
                               std::to_string(cfg.num_aps) + ',';
    for (const auto& s : cell.snapshots) {
      const auto& se = ideal ? s.se_ideal : s.se;
      for (std::size_t k = 0; k < se.size(); ++k)
        out += prefix + std::to_string(s.snapshot) + ',' + std::to_string(k) + ',' +
               num(se[k]) + ',' + num(s.papr_median) + '\n';
    }
  }
  write_file_atomic(path, out);
}

ordered_json summary_json(const ResultSet& rs) {
  ordered_json cells = ordered_json::array();
  ordered_json failures = ordered_json::array();
  for (const auto& cell : rs.cells) {
    if (!cell.ok()) {
      failures.push_back({{"cell_id", cell.spec.id}, {"key", cell.spec.key}, {"error", cell.error}});
      continue;
    }
    const SimConfig& cfg = cell.spec.cfg;
    ordered_json j;
    j["cell_id"] = cell.spec.id;
    j["key"] = cell.spec.key;
    j["method"] = to_string(cfg.compensation);
    j["precoder"] = to_string(cfg.precoder);
    j["ibo_db"] = cfg.ibo_db;
    j["M"] = cfg.antennas;
    j["K"] = cfg.num_users;
    j["L"] = cfg.num_aps;
    j["seed"] = cfg.seed;
    j["snapshots"] = cell.snapshots.size();
    const auto se = cell.se_samples();
    const auto se_ideal = cell.se_ideal_samples();
    j["median_se"] = median(se);
    j["median_se_ideal"] = median(se_ideal);
    double mean = 0.0;
    for (double v : se) mean += v;
    j["mean_se"] = mean / static_cast<double>(se.size());
    const double hi = std::ceil(std::max(*std::max_element(se.begin(), se.end()),
                                         *std::max_element(se_ideal.begin(), se_ideal.end())));
    const auto grid = linear_grid(0.0, std::max(hi, 1.0), 101);
    const MetricCurve c = cdf(se, grid);
    const MetricCurve ci = cdf(se_ideal, grid);
    j["se_cdf"] = {{"threshold", c.threshold}, {"probability", c.probability},
                   {"probability_ideal", ci.probability}};
    const Histogram h = cell.papr();
    if (h.count() > 0) {
      const MetricCurve pc = h.ccdf();
      j["papr"] = {{"median_db", h.median()},
                   {"ccdf_1e-1_db", h.ccdf_point(1e-1)},
                   {"ccdf_1e-2_db", h.ccdf_point(1e-2)},
                   {"ccdf", {{"threshold", pc.threshold}, {"probability", pc.probability}}}};
    }
    ordered_json terms;
    double cp2 = 0, pu = 0, ui = 0, hwi = 0;
    std::size_t n = 0;
    for (const auto& s : cell.snapshots)
      for (const auto& t : s.terms) {
        cp2 += t.cp2;
        pu += t.pu;
        ui += t.ui;
        hwi += t.hwi;
        ++n;
      }
    j["sinr_terms_mean"] = {{"cp2", cp2 / n}, {"pu", pu / n}, {"ui", ui / n}, {"hwi", hwi / n}};
    const PowerAudit p = cell.power();
    j["power"] = {{"max_power_ratio", p.max_power_ratio},
                  {"max_guard_power", p.max_guard_power},
                  {"min_rho", p.min_rho},
                  {"frames", p.frames},
                  {"scaled_frames", p.scaled_frames},
                  {"within_budget", p.within_budget()}};
    ComplexityParams cp;
    cp.M = cfg.antennas;
    cp.K = cfg.num_users;
    cp.tau_s = static_cast<int>(std::lround(cell.mean_tau_s()));
    cp.active = cfg.num_active();
    cp.symbols = cfg.symbols_per_block;
    cp.tr_iterations = cfg.tr_iterations;
    cp.papr_iterations = cfg.papr_iterations;
    ordered_json cx;
    cx["tau_s_mean"] = cell.mean_tau_s();
    for (const char* m : {"pzf", "tr", "papr_aware", "hw_aware"})
      cx[m] = complexity_count(m, cp).multiplications;
    j["complexity"] = cx;
    j["config"] = to_json(cfg);
    cells.push_back(j);
  }
  ordered_json root;
  root["cells"] = cells;
  root["failures"] = failures;
  return root;
}

void export_results(const ResultSet& rs, const fs::path& dir) {
  if (rs.cells.empty()) throw Error("nothing to export");
  fs::create_directories(dir);
  write_samples_csv(rs, dir / "samples.csv", false);
  write_samples_csv(rs, dir / "ideal_samples.csv", true);
  write_file_atomic(dir / "summary.json", summary_json(rs).dump(1) + "\n");
}

}  // namespace cfmimo
