#include "cpsim/io.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cpsim::io {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

[[noreturn]] void config_error(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << std::setprecision(12);
  return out;
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // Strip comments, but not inside quoted strings.
    char quote = '\0';
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quote != '\0') {
        if (c == quote) quote = '\0';
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '#') {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      config_error("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      config_error("line " + std::to_string(lineno) + ": empty key or value");
    cfg.values_[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  return values_.count(key) != 0;
}

std::string Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) config_error("missing key '" + key + "'");
  return strip_quotes(it->second);
}

std::string Config::get_string(const std::string& key,
                               const std::string& def) const {
  return has(key) ? get_string(key) : def;
}

double Config::get_double(const std::string& key) const {
  const std::string raw = get_string(key);
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(raw, &pos);
  } catch (const std::exception&) {
    config_error("key '" + key + "': not a number: " + raw);
  }
  if (pos != raw.size()) config_error("key '" + key + "': trailing junk: " + raw);
  return v;
}

double Config::get_double(const std::string& key, double def) const {
  return has(key) ? get_double(key) : def;
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string raw = get_string(key);
  std::size_t pos = 0;
  std::int64_t v;
  try {
    v = std::stoll(raw, &pos);
  } catch (const std::exception&) {
    config_error("key '" + key + "': not an integer: " + raw);
  }
  if (pos != raw.size())
    config_error("key '" + key + "': trailing junk: " + raw);
  return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t def) const {
  return has(key) ? get_int(key) : def;
}

namespace {

std::vector<std::string> split_list(const std::string& key,
                                    const std::string& raw) {
  if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']')
    config_error("key '" + key + "': expected [a, b, ...]");
  std::vector<std::string> out;
  std::string body = raw.substr(1, raw.size() - 2);
  std::istringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::vector<std::int64_t> Config::get_int_list(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) config_error("missing key '" + key + "'");
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(key, it->second)) out.push_back(std::stoll(item));
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) config_error("missing key '" + key + "'");
  std::vector<double> out;
  for (const auto& item : split_list(key, it->second)) out.push_back(std::stod(item));
  return out;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

RunConfig RunConfig::from_config(const Config& cfg) {
  static const std::set<std::string> known = {
      "model",    "engine",     "omega",         "Gamma",
      "L",        "sites",      "chi",           "dt",
      "t_max",    "n_traj",     "seed",          "measure_every",
      "svd_cutoff", "fit_lo",   "fit_hi",        "record_profile",
      "observable", "output_dir"};
  for (const auto& k : cfg.keys())
    if (!known.count(k)) config_error("unknown key '" + k + "'");
  if (cfg.has("L") && cfg.has("sites"))
    config_error("give either 'L' or 'sites', not both");

  RunConfig rc;

  const std::string model = cfg.get_string("model", "quantum");
  if (model == "quantum") {
    rc.spec.kind = ModelSpec::Kind::quantum;
    rc.spec.omega = cfg.get_double("omega", 6.0);
  } else if (model == "classical") {
    rc.spec.kind = ModelSpec::Kind::classical;
    rc.spec.Gamma = cfg.get_double("Gamma", 6.75);
  } else {
    config_error("model must be 'quantum' or 'classical', got '" + model + "'");
  }
  rc.spec.sites = static_cast<int>(
      cfg.has("L") ? cfg.get_int("L") : cfg.get_int("sites", 51));
  rc.spec.gamma = 1.0;  // all rates in units of the decay rate
  rc.spec.validate();

  const std::string engine = cfg.get_string("engine", "schrodinger");
  if (engine == "schrodinger")
    rc.engine = Engine::double_schrodinger;
  else if (engine == "heisenberg")
    rc.engine = Engine::double_heisenberg;
  else if (engine == "qjmc")
    rc.engine = Engine::qjmc;
  else
    config_error("engine must be schrodinger | heisenberg | qjmc, got '" +
                 engine + "'");
  if (rc.engine == Engine::qjmc && rc.spec.kind == ModelSpec::Kind::classical)
    config_error("qjmc engine requires the quantum model");

  if (cfg.has("chi")) {
    for (auto c : cfg.get_int_list("chi")) {
      if (c < 1) config_error("chi entries must be >= 1");
      rc.chi_list.push_back(static_cast<int>(c));
    }
    if (rc.chi_list.empty()) config_error("chi list must not be empty");
  } else {
    rc.chi_list = {rc.engine == Engine::qjmc ? 128 : 64};
  }

  rc.dt = cfg.get_double("dt", rc.engine == Engine::qjmc ? 0.01 : 0.1);
  rc.t_max = cfg.get_double("t_max", 10.0);
  rc.n_traj = static_cast<int>(cfg.get_int("n_traj", 1000));
  rc.master_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  rc.measure_every = static_cast<int>(
      cfg.get_int("measure_every", rc.engine == Engine::qjmc ? 10 : 1));
  rc.svd_cutoff = cfg.get_double("svd_cutoff", 1e-12);
  rc.fit_lo = cfg.get_double("fit_lo", 5.0);
  rc.fit_hi = cfg.get_double("fit_hi", 10.0);
  rc.record_profile = cfg.get_int("record_profile", 0) != 0;
  rc.heisenberg_observable = cfg.get_string("observable", "survival");
  if (rc.heisenberg_observable != "survival" &&
      rc.heisenberg_observable != "n_seed")
    config_error("observable must be survival | n_seed");
  rc.output_dir = cfg.get_string("output_dir", "out");

  if (rc.dt <= 0 || rc.t_max <= 0) config_error("dt and t_max must be > 0");
  if (rc.n_traj < 1) config_error("n_traj must be >= 1");
  if (rc.measure_every < 1) config_error("measure_every must be >= 1");
  if (!(rc.fit_lo < rc.fit_hi)) config_error("need fit_lo < fit_hi");
  return rc;
}

void write_series_csv(const std::filesystem::path& path,
                      const ObservableSeries& series) {
  auto out = open_out(path);
  out << "t,P_sur,N_a,n_seed,S_tilde,err_est\n";
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    auto col = [&](const std::vector<double>& v) {
      return i < v.size() ? v[i] : 0.0;
    };
    out << series.times[i] << ',' << col(series.survival) << ','
        << col(series.total_density) << ',' << col(series.seed_density) << ','
        << col(series.op_entropy) << ',' << col(series.error_estimate) << '\n';
  }
}

ObservableSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ObservableSeries s;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": empty file");
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != 6)
      throw std::runtime_error(path.string() + ": expected 6 columns");
    s.times.push_back(row[0]);
    s.survival.push_back(row[1]);
    s.total_density.push_back(row[2]);
    s.seed_density.push_back(row[3]);
    s.op_entropy.push_back(row[4]);
    s.error_estimate.push_back(row[5]);
  }
  return s;
}

void write_profile_csv(const std::filesystem::path& path,
                       const ObservableSeries& series) {
  auto out = open_out(path);
  out << "t";
  const std::size_t sites =
      series.density_profile.empty() ? 0 : series.density_profile[0].size();
  for (std::size_t k = 0; k < sites; ++k) out << ",n" << k;
  out << '\n';
  for (std::size_t i = 0; i < series.density_profile.size(); ++i) {
    out << series.times[i];
    for (double v : series.density_profile[i]) out << ',' << v;
    out << '\n';
  }
}

void write_stats_csv(const std::filesystem::path& path,
                     const EnsembleStats& stats) {
  auto out = open_out(path);
  out << "t,P_sur,P_sur_se,N_a,N_a_se,n_seed,n_seed_se\n";
  for (std::size_t i = 0; i < stats.times.size(); ++i) {
    out << stats.times[i] << ',' << stats.survival_mean[i] << ','
        << stats.survival_se[i] << ',' << stats.total_density_mean[i] << ','
        << stats.total_density_se[i] << ',' << stats.seed_density_mean[i] << ','
        << stats.seed_density_se[i] << '\n';
  }
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h,
                         bool scale_first_bin) {
  auto out = open_out(path);
  out << "# t_snapshot=" << h.snapshot_time << " mean_s=" << h.mean_s
      << " s_bar=" << h.s_bar << '\n';
  out << "bin_left,bin_right,height\n";
  for (std::size_t i = 0; i < h.height.size(); ++i) {
    const double scale = (scale_first_bin && i == 0) ? 0.1 : 1.0;
    out << h.bin_left[i] << ',' << h.bin_right[i] << ','
        << scale * h.height[i] << '\n';
  }
}

namespace {

json record_to_json(const TrajectoryRecord& rec) {
  json j;
  j["index"] = rec.index;
  j["chi_max"] = rec.chi_max;
  j["absorbed_at"] = rec.absorbed_at;
  j["times"] = rec.times;
  j["survival_overlap"] = rec.survival_overlap;
  j["total_density"] = rec.total_density;
  j["seed_density"] = rec.seed_density;
  j["s_traj"] = rec.s_traj;
  j["discarded"] = rec.discarded;
  json jumps = json::array();
  for (const auto& [t, site] : rec.jumps) jumps.push_back({t, site});
  j["jumps"] = jumps;
  return j;
}

TrajectoryRecord record_from_json(const json& j) {
  TrajectoryRecord rec;
  rec.index = j.at("index").get<std::uint64_t>();
  rec.chi_max = j.at("chi_max").get<int>();
  rec.absorbed_at = j.at("absorbed_at").get<double>();
  rec.times = j.at("times").get<std::vector<double>>();
  rec.survival_overlap = j.at("survival_overlap").get<std::vector<double>>();
  rec.total_density = j.at("total_density").get<std::vector<double>>();
  rec.seed_density = j.at("seed_density").get<std::vector<double>>();
  rec.s_traj = j.at("s_traj").get<std::vector<double>>();
  rec.discarded = j.at("discarded").get<std::vector<double>>();
  for (const auto& jj : j.at("jumps"))
    rec.jumps.emplace_back(jj.at(0).get<double>(), jj.at(1).get<int>());
  return rec;
}

std::string traj_filename(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "traj_%06llu.json",
                static_cast<unsigned long long>(index));
  return buf;
}

}  // namespace

void write_ensemble_store(const std::filesystem::path& dir,
                          const TrajectoryOptions& opts,
                          const std::vector<TrajectoryRecord>& records) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["kind"] =
      opts.spec.kind == ModelSpec::Kind::quantum ? "quantum" : "classical";
  manifest["sites"] = opts.spec.sites;
  manifest["gamma"] = opts.spec.gamma;
  manifest["omega"] = opts.spec.omega;
  manifest["Gamma"] = opts.spec.Gamma;
  manifest["chi_max"] = opts.chi_max;
  manifest["dt"] = opts.dt;
  manifest["t_max"] = opts.t_max;
  manifest["measure_every"] = opts.measure_every;
  manifest["svd_cutoff"] = opts.svd_cutoff;
  manifest["master_seed"] = opts.master_seed;
  json files = json::array();
  for (const auto& rec : records) {
    const std::string name = traj_filename(rec.index);
    auto out = open_out(dir / name);
    out << record_to_json(rec).dump(1) << '\n';
    files.push_back(name);
  }
  manifest["trajectories"] = files;
  auto out = open_out(dir / "manifest.json");
  out << manifest.dump(1) << '\n';
}

std::pair<TrajectoryOptions, std::vector<TrajectoryRecord>> read_ensemble_store(
    const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in)
    throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
  json manifest = json::parse(in);
  TrajectoryOptions opts;
  opts.spec.kind = manifest.at("kind").get<std::string>() == "quantum"
                       ? ModelSpec::Kind::quantum
                       : ModelSpec::Kind::classical;
  opts.spec.sites = manifest.at("sites").get<int>();
  opts.spec.gamma = manifest.at("gamma").get<double>();
  opts.spec.omega = manifest.at("omega").get<double>();
  opts.spec.Gamma = manifest.at("Gamma").get<double>();
  opts.chi_max = manifest.at("chi_max").get<int>();
  opts.dt = manifest.at("dt").get<double>();
  opts.t_max = manifest.at("t_max").get<double>();
  opts.measure_every = manifest.at("measure_every").get<int>();
  opts.svd_cutoff = manifest.at("svd_cutoff").get<double>();
  opts.master_seed = manifest.at("master_seed").get<std::uint64_t>();
  std::vector<TrajectoryRecord> records;
  for (const auto& name : manifest.at("trajectories")) {
    std::ifstream tin(dir / name.get<std::string>());
    if (!tin)
      throw std::runtime_error("cannot open trajectory file " +
                               name.get<std::string>());
    records.push_back(record_from_json(json::parse(tin)));
  }
  return {opts, std::move(records)};
}

std::string fit_to_json(const FitResult& fit) {
  json j;
  j["exponent"] = fit.exponent;
  j["amplitude"] = fit.amplitude;
  j["t_lo"] = fit.t_lo;
  j["t_hi"] = fit.t_hi;
  j["residual_rms"] = fit.residual_rms;
  j["error"] = fit.error;
  switch (fit.method) {
    case FitResult::ErrorMethod::none: j["error_method"] = "none"; break;
    case FitResult::ErrorMethod::chi_difference:
      j["error_method"] = "chi_difference";
      break;
    case FitResult::ErrorMethod::bootstrap_2sigma:
      j["error_method"] = "bootstrap_2sigma";
      break;
  }
  return j.dump(1);
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

void write_manifest(const std::filesystem::path& dir,
                    const std::string& config_text,
                    const std::vector<std::filesystem::path>& artifacts,
                    double wall_seconds) {
  json j;
  {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : config_text) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    j["config_hash"] = ss.str();
  }
  j["config"] = config_text;
  j["wall_seconds"] = wall_seconds;
  const auto now = std::chrono::system_clock::now();
  j["completed_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
          .count();
  json files = json::object();
  for (const auto& p : artifacts)
    files[p.filename().string()] = file_hash(p);
  j["artifacts"] = files;
  auto out = open_out(dir / "run_manifest.json");
  out << j.dump(1) << '\n';
}

}  // namespace cpsim::io
