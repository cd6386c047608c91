#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpsim/analysis.hpp"
#include "cpsim/dense.hpp"
#include "cpsim/io.hpp"
#include "cpsim/qjmc.hpp"
#include "cpsim/tebd.hpp"

namespace fs = std::filesystem;
using namespace cpsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::string chi_tag(int chi) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "chi%03d", chi);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const fs::path& config_path) {
  const std::string config_text = read_text(config_path);
  const io::Config cfg = io::Config::parse_string(config_text);
  const io::RunConfig rc = io::RunConfig::from_config(cfg);

  fs::create_directories(rc.output_dir);
  std::vector<fs::path> artifacts;
  const auto t0 = std::chrono::steady_clock::now();

  for (int chi : rc.chi_list) {
    const std::string tag = chi_tag(chi);
    if (rc.engine == io::Engine::qjmc) {
      TrajectoryOptions opts;
      opts.spec = rc.spec;
      opts.chi_max = chi;
      opts.dt = rc.dt;
      opts.t_max = rc.t_max;
      opts.measure_every = rc.measure_every;
      opts.svd_cutoff = rc.svd_cutoff;
      opts.master_seed = rc.master_seed;
      Ensemble ens = run_ensemble(opts, rc.n_traj);
      const fs::path store = rc.output_dir / ("ensemble_" + tag);
      io::write_ensemble_store(store, opts, ens.records);
      const fs::path stats = rc.output_dir / ("stats_" + tag + ".csv");
      io::write_stats_csv(stats, ens.stats);
      artifacts.push_back(stats);
      artifacts.push_back(store / "manifest.json");
      std::cout << tag << ": " << rc.n_traj << " trajectories, s_bar = "
                << ens.stats.s_bar << "\n";
    } else {
      DoubleSpaceOptions opts;
      opts.spec = rc.spec;
      opts.chi_max = chi;
      opts.dt = rc.dt;
      opts.t_max = rc.t_max;
      opts.measure_every = rc.measure_every;
      opts.svd_cutoff = rc.svd_cutoff;
      opts.record_profile = rc.record_profile;
      ObservableSeries series;
      if (rc.engine == io::Engine::double_schrodinger) {
        series = run_schrodinger(opts);
      } else {
        const bool survival_mode = rc.heisenberg_observable == "survival";
        Mps obs = survival_mode
                      ? vectorized_absorbing_state(rc.spec.sites)
                      : vectorized_site_operator(rc.spec.sites, ops::number(),
                                                 rc.spec.seed_site());
        series = run_heisenberg(opts, obs, survival_mode);
        // Heisenberg runs track one contraction; expose n_seed in its column.
        if (!survival_mode) series.seed_density = series.value;
      }
      const fs::path out = rc.output_dir / ("series_" + tag + ".csv");
      io::write_series_csv(out, series);
      artifacts.push_back(out);
      if (rc.record_profile && !series.density_profile.empty()) {
        const fs::path prof = rc.output_dir / ("profile_" + tag + ".csv");
        io::write_profile_csv(prof, series);
        artifacts.push_back(prof);
      }
      std::cout << tag << ": " << series.times.size()
                << " samples, max S_tilde = "
                << *std::max_element(series.op_entropy.begin(),
                                     series.op_entropy.end())
                << ", err_est = " << series.error_estimate.back() << "\n";
    }
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  io::write_manifest(rc.output_dir, config_text, artifacts, wall);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

std::map<int, fs::path> find_by_pattern(const fs::path& dir,
                                        const std::string& prefix,
                                        const std::string& suffix) {
  std::map<int, fs::path> out;
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) != 0) continue;
    if (name.size() < prefix.size() + suffix.size() ||
        name.substr(name.size() - suffix.size()) != suffix)
      continue;
    const std::string mid =
        name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    try {
      out[std::stoi(mid)] = entry.path();
    } catch (const std::exception&) {
    }
  }
  return out;
}

void print_fit_row(const std::string& label, const FitResult& fit) {
  std::printf("  %-8s %+.4f", label.c_str(), fit.exponent);
  if (fit.method != FitResult::ErrorMethod::none)
    std::printf(" +/- %.4f (%s)", fit.error,
                fit.method == FitResult::ErrorMethod::chi_difference
                    ? "chi-diff"
                    : "bootstrap 2sigma");
  std::printf("   window [%g, %g]  rms %.3g\n", fit.t_lo, fit.t_hi,
              fit.residual_rms);
}

int cmd_analyze(const fs::path& dir, double fit_lo, double fit_hi,
                int n_bootstrap, bool with_z) {
  nlohmann::json report;
  report["fit_window"] = {fit_lo, fit_hi};
  bool found_anything = false;

  auto fit_or_explain = [&](const std::vector<double>& t,
                            const std::vector<double>& y) {
    try {
      return powerlaw_fit(t, y, fit_lo, fit_hi);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("fit window [" + std::to_string(fit_lo) +
                                  ", " + std::to_string(fit_hi) +
                                  "]: " + e.what());
    }
  };

  const auto series_files = find_by_pattern(dir, "series_chi", ".csv");
  if (!series_files.empty()) {
    found_anything = true;
    const int chi_hi = series_files.rbegin()->first;
    const ObservableSeries hi = io::read_series_csv(series_files.at(chi_hi));
    std::printf("double-space series, chi = %d:\n", chi_hi);
    struct Row {
      const char* label;
      const std::vector<double>* values;
      double sign;  // exponent reported as sign * slope
    };
    const std::vector<Row> rows = {
        {"Theta", &hi.total_density, +1.0},
        {"delta", &hi.survival, -1.0},
        {"s", &hi.seed_density, +1.0},
    };
    std::optional<ObservableSeries> half;
    if (series_files.count(chi_hi / 2))
      half = io::read_series_csv(series_files.at(chi_hi / 2));
    std::map<std::string, FitResult> fits;
    for (const auto& row : rows) {
      FitResult fit = fit_or_explain(hi.times, *row.values);
      if (half) {
        const ObservableSeries& h = *half;
        const std::vector<double>& hv = row.values == &hi.total_density
                                            ? h.total_density
                                            : row.values == &hi.survival
                                                  ? h.survival
                                                  : h.seed_density;
        fit = chi_difference_error(fit, fit_or_explain(h.times, hv));
      }
      fit.exponent *= row.sign;
      fits[row.label] = fit;
      print_fit_row(row.label, fit);
      report[row.label] = nlohmann::json::parse(io::fit_to_json(fit));
    }
    if (with_z) {
      const FitResult z = propagate_z(fits.at("Theta"), fits.at("s"));
      print_fit_row("z", z);
      report["z"] = nlohmann::json::parse(io::fit_to_json(z));
    }
  }

  const auto stores = find_by_pattern(dir, "ensemble_chi", "");
  if (!stores.empty()) {
    found_anything = true;
    const int chi_hi = stores.rbegin()->first;
    auto [opts, records] = io::read_ensemble_store(stores.at(chi_hi));
    std::printf("trajectory ensemble, chi = %d, n_traj = %zu:\n", chi_hi,
                records.size());
    const std::vector<std::pair<std::string, TrajObservable>> rows = {
        {"Theta", TrajObservable::total_density},
        {"delta", TrajObservable::survival},
        {"s", TrajObservable::seed_density},
    };
    for (const auto& [label, obs] : rows) {
      FitResult fit =
          bootstrap_exponent(records, obs, fit_lo, fit_hi, n_bootstrap);
      if (label == "delta") fit.exponent = -fit.exponent;
      print_fit_row(label, fit);
      report["traj_" + label] = nlohmann::json::parse(io::fit_to_json(fit));
    }
    if (with_z) {
      const FitResult z = bootstrap_z(records, fit_lo, fit_hi, n_bootstrap);
      print_fit_row("z", z);
      report["traj_z"] = nlohmann::json::parse(io::fit_to_json(z));
    }
  }

  if (!found_anything)
    throw std::invalid_argument("no series or ensemble artifacts in " +
                                dir.string());
  std::ofstream out(dir / "analysis.json");
  out << report.dump(1) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plotdata

int cmd_plotdata(const fs::path& dir, const std::string& figure,
                 const std::vector<double>& hist_times, double fit_lo,
                 double fit_hi) {
  if (figure == "loglog") {
    const auto series_files = find_by_pattern(dir, "series_chi", ".csv");
    const auto stats_files = find_by_pattern(dir, "stats_chi", ".csv");
    if (series_files.empty() && stats_files.empty())
      throw std::invalid_argument("no series in " + dir.string());
    for (const auto& [chi, path] : series_files) {
      const ObservableSeries s = io::read_series_csv(path);
      const FitResult fn = powerlaw_fit(s.times, s.total_density, fit_lo, fit_hi);
      const FitResult fp = powerlaw_fit(s.times, s.survival, fit_lo, fit_hi);
      std::ofstream out(dir / ("plot_loglog_" + chi_tag(chi) + ".csv"));
      out << std::setprecision(12)
          << "t,P_sur,N_a,n_seed,fit_P_sur,fit_N_a\n";
      for (std::size_t i = 0; i < s.times.size(); ++i) {
        const double t = s.times[i];
        const double fit_p =
            t > 0 ? fp.amplitude * std::pow(t, fp.exponent) : 0.0;
        const double fit_n =
            t > 0 ? fn.amplitude * std::pow(t, fn.exponent) : 0.0;
        out << t << ',' << s.survival[i] << ',' << s.total_density[i] << ','
            << s.seed_density[i] << ',' << fit_p << ',' << fit_n << '\n';
      }
    }
    return kExitOk;
  }

  if (figure == "entropy_barrier") {
    const fs::path schro = dir / "series_schrodinger.csv";
    const fs::path heis = dir / "series_heisenberg.csv";
    auto pick = [&](const fs::path& named, const fs::path& fallback_dir,
                    const char* what) -> ObservableSeries {
      if (fs::exists(named)) return io::read_series_csv(named);
      const auto files = find_by_pattern(fallback_dir, "series_chi", ".csv");
      if (files.empty())
        throw std::invalid_argument(std::string("missing ") + what +
                                    " series for entropy_barrier (expected " +
                                    named.string() + ")");
      return io::read_series_csv(files.rbegin()->second);
    };
    const ObservableSeries a = pick(schro, dir / "schrodinger", "Schrodinger");
    const ObservableSeries b = pick(heis, dir / "heisenberg", "Heisenberg");
    if (a.times.size() != b.times.size())
      throw std::invalid_argument(
          "entropy_barrier: series lengths differ between pictures");
    std::ofstream out(dir / "plot_entropy_barrier.csv");
    out << std::setprecision(12)
        << "t,S_schrodinger,S_heisenberg,err_schrodinger,err_heisenberg\n";
    for (std::size_t i = 0; i < a.times.size(); ++i)
      out << a.times[i] << ',' << a.op_entropy[i] << ',' << b.op_entropy[i]
          << ',' << a.error_estimate[i] << ',' << b.error_estimate[i] << '\n';
    return kExitOk;
  }

  if (figure == "ent_hist") {
    const auto stores = find_by_pattern(dir, "ensemble_chi", "");
    if (stores.empty())
      throw std::invalid_argument("no ensemble stores in " + dir.string());
    // Bin edges come from the largest-chi ensemble at its final time.
    auto [ref_opts, ref_records] = io::read_ensemble_store(stores.rbegin()->second);
    Ensemble reference{ref_opts, ref_records, compute_stats(ref_records)};
    for (const auto& [chi, store] : stores) {
      auto [opts, records] = io::read_ensemble_store(store);
      Ensemble ens{opts, records, compute_stats(records)};
      for (double t : hist_times) {
        const Histogram h = entanglement_histogram(ens, t, reference);
        char name[64];
        std::snprintf(name, sizeof(name), "plot_ent_hist_%s_t%g.csv",
                      chi_tag(chi).c_str(), t);
        io::write_histogram_csv(dir / name, h, /*scale_first_bin=*/true);
      }
    }
    return kExitOk;
  }

  throw std::invalid_argument("unknown figure id '" + figure +
                              "' (expected loglog | entropy_barrier | ent_hist)");
}

// ---------------------------------------------------------------------------
// fixtures

nlohmann::json dense_profile_fixture(const ModelSpec& spec,
                                     const std::vector<double>& times) {
  Matrix rho0 = Matrix::Zero(1 << spec.sites, 1 << spec.sites);
  std::int64_t seed_idx = 0;
  for (int k = 0; k < spec.sites; ++k)
    seed_idx = 2 * seed_idx + (k == spec.seed_site() ? 1 : 0);
  rho0(seed_idx, seed_idx) = 1.0;
  dense::DenseState state{dense::vectorize(rho0, spec.sites),
                          dense::DenseState::Kind::vectorized};

  nlohmann::json j;
  j["sites"] = spec.sites;
  j["kind"] = spec.kind == ModelSpec::Kind::quantum ? "quantum" : "classical";
  j["omega"] = spec.omega;
  j["Gamma"] = spec.Gamma;
  j["gamma"] = spec.gamma;
  j["times"] = times;
  nlohmann::json profiles = nlohmann::json::array();
  nlohmann::json survival = nlohmann::json::array();
  const Matrix n = ops::number();
  for (double t : times) {
    dense::DenseState at = dense::lindblad_evolve(spec, state, t, 64);
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < spec.sites; ++k)
      row.push_back(std::real(dense::vec_expectation(at.v, n, k, spec.sites)));
    profiles.push_back(row);
    // P_sur = 1 - <vac|rho|vac>, vacuum is global index 0.
    const Matrix rho = dense::devectorize(at.v, spec.sites);
    survival.push_back(1.0 - std::real(rho(0, 0)));
  }
  j["density_profile"] = profiles;
  j["survival"] = survival;
  return j;
}

int cmd_fixtures(const fs::path& out_path, bool force) {
  if (fs::exists(out_path) && !force)
    throw std::invalid_argument(out_path.string() +
                                " exists; pass --force to regenerate");
  const std::vector<double> times = {0.5, 1.0, 2.0};
  nlohmann::json j;
  {
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::quantum;
    spec.sites = 4;
    spec.omega = 6.0;
    j["qcp_L4"] = dense_profile_fixture(spec, times);
  }
  {
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::classical;
    spec.sites = 4;
    spec.Gamma = 6.75;
    j["ccp_L4"] = dense_profile_fixture(spec, times);
  }
  fs::create_directories(out_path.parent_path());
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open " + out_path.string());
  out << j.dump(1) << '\n';
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contact-process tensor-network simulator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "execute a run configuration");
  run->add_option("--config", config_path, "config file")->required();

  std::string analyze_dir;
  double fit_lo = 5.0, fit_hi = 10.0;
  int n_bootstrap = 1000;
  bool with_z = false;
  auto* analyze = app.add_subcommand("analyze", "fit exponents from a run dir");
  analyze->add_option("--dir", analyze_dir, "run directory")->required();
  analyze->add_option("--fit-lo", fit_lo, "fit window start (gamma t)");
  analyze->add_option("--fit-hi", fit_hi, "fit window end (gamma t)");
  analyze->add_option("--bootstrap", n_bootstrap, "bootstrap resamples");
  analyze->add_flag("--z", with_z, "also report the dynamical exponent z");

  std::string plot_dir, figure;
  std::vector<double> hist_times = {1.0, 5.0, 10.0};
  auto* plot = app.add_subcommand("plotdata", "emit plot-ready files");
  plot->add_option("--dir", plot_dir, "run directory")->required();
  plot->add_option("--figure", figure,
                   "figure id: loglog | entropy_barrier | ent_hist")
      ->required();
  plot->add_option("--times", hist_times, "histogram snapshot times");
  plot->add_option("--fit-lo", fit_lo, "fit window start");
  plot->add_option("--fit-hi", fit_hi, "fit window end");

  std::string fixtures_out = "tests/fixtures/oracle_fixtures.json";
  bool force = false;
  auto* fixtures = app.add_subcommand("fixtures", "regenerate oracle fixtures");
  fixtures->add_option("--out", fixtures_out, "output path");
  fixtures->add_flag("--force", force, "overwrite an existing fixture file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (analyze->parsed())
      return cmd_analyze(analyze_dir, fit_lo, fit_hi, n_bootstrap, with_z);
    if (plot->parsed())
      return cmd_plotdata(plot_dir, figure, hist_times, fit_lo, fit_hi);
    if (fixtures->parsed()) return cmd_fixtures(fixtures_out, force);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    // Only configuration problems are usage errors; anything else (bad fit
    // windows, missing data) is a runtime failure.
    return std::string_view(e.what()).starts_with("config:") ? kExitConfig
                                                             : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
