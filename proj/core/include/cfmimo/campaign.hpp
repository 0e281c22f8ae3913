#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfmimo/config.hpp"
#include "cfmimo/simulation.hpp"

namespace cfmimo {

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/// Parses "key=v1,v2,...".
SweepAxis parse_sweep(const std::string& spec);

struct Campaign {
  SimConfig base;
  std::vector<SweepAxis> axes;
  std::filesystem::path out_dir;
  int jobs = 1;
  bool resume = true;
  ChainMode chain_mode = ChainMode::kSerial;
};

struct CellSpec {
  int id = 0;
  std::string key;  // canonical "k1=v1;k2=v2" over the sweep axes
  std::vector<std::pair<std::string, std::string>> assignment;
  SimConfig cfg;
};

/// Cartesian product of the sweep axes applied to the base config, first axis
/// slowest. No axes gives the base config as a single cell. Throws on an
/// empty product or an invalid resulting config.
std::vector<CellSpec> enumerate_cells(const Campaign& c);

/// Keys that only change hardware or processing, not the propagation
/// scenario. Cells differing only in these share channel draws.
const std::vector<std::string>& hardware_keys();

/// Serialised config with the hardware keys and the seed removed.
std::string scenario_key(const SimConfig& cfg);

/// Seed of snapshot `index` of a cell; a pure function of its arguments.
std::uint64_t snapshot_seed(const SimConfig& cfg, int index);

struct CellResult {
  CellSpec spec;
  std::vector<SnapshotRecord> snapshots;
  double wall_seconds = 0.0;
  bool resumed = false;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
  std::vector<double> se_samples() const;
  std::vector<double> se_ideal_samples() const;
  Histogram papr() const;
  PowerAudit power() const;
  double mean_tau_s() const;
};

struct ResultSet {
  std::vector<CellResult> cells;
  int failures() const;
};

/// Runs every (cell, snapshot) pair on `jobs` worker threads. A cell is
/// written to out_dir/cells/ once all its snapshots are done; existing cell
/// files with a matching key are loaded instead of recomputed.
ResultSet run_campaign(const Campaign& c,
                       const std::function<void(const CellResult&)>& on_cell = {});

nlohmann::ordered_json cell_to_json(const CellResult& cell);
CellResult cell_from_json(const nlohmann::json& j);

/// Long-format CSV of the configured method's SE samples.
void write_samples_csv(const ResultSet& rs, const std::filesystem::path& path,
                       bool ideal = false);
nlohmann::ordered_json summary_json(const ResultSet& rs);
/// samples.csv, ideal_samples.csv and summary.json under `dir`.
void export_results(const ResultSet& rs, const std::filesystem::path& dir);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& data);

}  // namespace cfmimo
