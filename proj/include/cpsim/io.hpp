#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpsim/analysis.hpp"
#include "cpsim/qjmc.hpp"
#include "cpsim/tebd.hpp"

namespace cpsim::io {

/// Flat TOML-style key = value config file. Arrays as [a, b, c], comments
/// with '#'.
class Config {
 public:
  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double def) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t def) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::string> keys() const;

 private:
  std::map<std::string, std::string> values_;
};

enum class Engine { double_schrodinger, double_heisenberg, qjmc };

/// A fully-resolved run request. All rates are in units of gamma; time in
/// units of 1/gamma.
struct RunConfig {
  ModelSpec spec;
  Engine engine = Engine::double_schrodinger;
  std::vector<int> chi_list;
  double dt = 0.0;  // resolved to the engine default when unset
  double t_max = 10.0;
  int n_traj = 1000;
  std::uint64_t master_seed = 0;
  int measure_every = 1;
  double svd_cutoff = 1e-12;
  double fit_lo = 5.0, fit_hi = 10.0;
  bool record_profile = false;
  std::string heisenberg_observable = "survival";  // survival | n_seed
  std::filesystem::path output_dir;

  static RunConfig from_config(const Config& cfg);
};

void write_series_csv(const std::filesystem::path& path,
                      const ObservableSeries& series);
ObservableSeries read_series_csv(const std::filesystem::path& path);
void write_profile_csv(const std::filesystem::path& path,
                       const ObservableSeries& series);
void write_stats_csv(const std::filesystem::path& path,
                     const EnsembleStats& stats);
void write_histogram_csv(const std::filesystem::path& path, const Histogram& h,
                         bool scale_first_bin);

void write_ensemble_store(const std::filesystem::path& dir,
                          const TrajectoryOptions& opts,
                          const std::vector<TrajectoryRecord>& records);
/// Reads every trajectory record in the store; options recovered from the
/// store manifest.
std::pair<TrajectoryOptions, std::vector<TrajectoryRecord>> read_ensemble_store(
    const std::filesystem::path& dir);

std::string fit_to_json(const FitResult& fit);

/// FNV-1a 64-bit content hash, hex encoded.
std::string file_hash(const std::filesystem::path& path);

/// Manifest listing every artifact with its content hash.
void write_manifest(const std::filesystem::path& dir,
                    const std::string& config_text,
                    const std::vector<std::filesystem::path>& artifacts,
                    double wall_seconds);

}  // namespace cpsim::io
