#include "pinnverse/harness.hpp"

#include "pinnverse/rng.hpp"
#include "pinnverse/trajectory_io.hpp"

#include <algorithm>
#include <bit>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace pinnverse {

namespace {

enum SeedStream : std::uint64_t { kTruthStream = 1, kNoiseStream = 2, kFitStream = 3 };

std::uint64_t stream_seed(std::uint64_t base, SeedStream stream, std::uint64_t a, std::uint64_t b = 0) {
  return derive_seed(derive_seed(derive_seed(base, stream), a), b);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return static_cast<long>(d);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: '" + key + "' expects true/false, got '" + v + "'");
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string grid_label(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_qubits < 1 || n_qubits > 2) throw std::invalid_argument("config: n_qubits must be 1 or 2");
  if (jobs < 1) throw std::invalid_argument("config: jobs must be at least 1");
  if (realizations < 1) throw std::invalid_argument("config: realizations must be at least 1");
  if (nc_grid.empty()) throw std::invalid_argument("config: nc_grid must not be empty");
  if (sigma_grid.empty()) throw std::invalid_argument("config: sigma_grid must not be empty");
  for (int n : nc_grid) {
    if (n < 1) throw std::invalid_argument("config: nc_grid entries must be positive");
  }
  for (double s : sigma_grid) {
    if (s < 0.0) throw std::invalid_argument("config: sigma_grid entries must be nonnegative");
  }
  if (sigma < 0.0) throw std::invalid_argument("config: sigma must be nonnegative");
  if (!data_path.empty() && !std::filesystem::exists(data_path)) {
    throw std::invalid_argument("config: data file '" + data_path + "' does not exist");
  }
  if (!truth_path.empty() && !std::filesystem::exists(truth_path)) {
    throw std::invalid_argument("config: truth file '" + truth_path + "' does not exist");
  }
  fit.validate();
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["mode"] = mode;
  j["seed"] = seed;
  j["realizations"] = realizations;
  j["n_qubits"] = n_qubits;
  j["nc_grid"] = nc_grid;
  j["sigma_grid"] = sigma_grid;
  j["sigma"] = sigma;
  j["truth_mask"] = truth_mask;
  j["train_mask"] = train_mask;
  j["train_gamma"] = train_gamma;
  j["data"] = data_path;
  j["truth"] = truth_path;
  j["fit"] = {{"n_physics", fit.n_physics},
              {"n_data", fit.n_data},
              {"t_final", fit.t_final},
              {"max_steps", fit.max_steps},
              {"lr", fit.lr},
              {"lr_decay", fit.lr_decay},
              {"lr_decay_every", fit.lr_decay_every},
              {"lambda_m", fit.lambda_m},
              {"lambda_d", fit.lambda_d},
              {"lbfgs_steps", fit.lbfgs_steps},
              {"lbfgs_history", fit.lbfgs_history},
              {"restarts", fit.restarts},
              {"plateau_window", fit.plateau_window},
              {"plateau_rel_tol", fit.plateau_rel_tol},
              {"hidden", fit.hidden_layers},
              {"activation", activation_name(fit.activation)},
              {"input_scale", fit.input_scale},
              {"gamma_init_fraction", fit.gamma_init_fraction}};
  return j;
}

void apply_config_value(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(to_long(key, v));
  } else if (key == "jobs") {
    c.jobs = static_cast<int>(to_long(key, v));
  } else if (key == "out") {
    c.out_dir = v;
  } else if (key == "realizations") {
    c.realizations = static_cast<int>(to_long(key, v));
  } else if (key == "n_qubits") {
    c.n_qubits = static_cast<int>(to_long(key, v));
  } else if (key == "nc_grid") {
    c.nc_grid.clear();
    for (const auto& item : split_list(v)) c.nc_grid.push_back(static_cast<int>(to_long(key, item)));
  } else if (key == "sigma_grid") {
    c.sigma_grid.clear();
    for (const auto& item : split_list(v)) c.sigma_grid.push_back(to_double(key, item));
  } else if (key == "sigma") {
    c.sigma = to_double(key, v);
  } else if (key == "truth_mask") {
    c.truth_mask = v;
  } else if (key == "train_mask") {
    c.train_mask = v;
  } else if (key == "train_gamma") {
    c.train_gamma = to_bool(key, v);
  } else if (key == "data") {
    c.data_path = v;
  } else if (key == "truth") {
    c.truth_path = v;
  } else if (key == "n_physics" || key == "N_t") {
    c.fit.n_physics = static_cast<int>(to_long(key, v));
  } else if (key == "n_data" || key == "N_c") {
    c.fit.n_data = static_cast<int>(to_long(key, v));
  } else if (key == "t_final" || key == "T") {
    c.fit.t_final = to_double(key, v);
  } else if (key == "max_steps") {
    c.fit.max_steps = to_long(key, v);
  } else if (key == "lr") {
    c.fit.lr = to_double(key, v);
  } else if (key == "lr_decay") {
    c.fit.lr_decay = to_double(key, v);
  } else if (key == "lr_decay_every") {
    c.fit.lr_decay_every = to_long(key, v);
  } else if (key == "lambda_m") {
    c.fit.lambda_m = to_double(key, v);
  } else if (key == "lambda_d") {
    c.fit.lambda_d = to_double(key, v);
  } else if (key == "restarts") {
    c.fit.restarts = static_cast<int>(to_long(key, v));
  } else if (key == "plateau_window") {
    c.fit.plateau_window = to_long(key, v);
  } else if (key == "plateau_rel_tol") {
    c.fit.plateau_rel_tol = to_double(key, v);
  } else if (key == "log_every") {
    c.fit.log_every = to_long(key, v);
  } else if (key == "hidden") {
    c.fit.hidden_layers.clear();
    for (const auto& item : split_list(v)) c.fit.hidden_layers.push_back(static_cast<int>(to_long(key, item)));
  } else if (key == "lbfgs_steps") {
    c.fit.lbfgs_steps = to_long(key, v);
  } else if (key == "lbfgs_history") {
    c.fit.lbfgs_history = static_cast<int>(to_long(key, v));
  } else if (key == "activation") {
    c.fit.activation = parse_activation(v);
  } else if (key == "input_scale") {
    c.fit.input_scale = to_double(key, v);
  } else if (key == "gamma_init_fraction") {
    c.fit.gamma_init_fraction = to_double(key, v);
  } else if (key == "s0") {
    const auto items = split_list(v);
    Eigen::VectorXd s0(static_cast<Eigen::Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) s0[static_cast<Eigen::Index>(i)] = to_double(key, items[i]);
    c.fit.s0 = s0;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

void apply_config_text(ExperimentConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str());
}

ExperimentConfig default_config(const std::string& mode) {
  ExperimentConfig c;
  c.mode = mode;
  if (mode == "single-qubit") {
    c.n_qubits = 1;
    c.fit.t_final = 10.0;  // microseconds
    c.fit.n_data = 100;
  }
  if (mode == "crosstalk") c.sigma = 0.02;
  return c;
}

ParameterMask mask_from_name(const std::string& name, int n_qubits, int n_channels, bool gamma) {
  ParameterMask m;
  if (name == "all") {
    m = ParameterMask::all(n_qubits, n_channels);
  } else if (name == "none") {
    m = ParameterMask::none(n_qubits, n_channels);
  } else if (name == "two_body") {
    if (n_qubits != 2) throw std::invalid_argument("mask 'two_body' needs two qubits");
    m = ParameterMask::two_body(n_channels);
  } else {
    throw std::invalid_argument("unknown mask '" + name + "' (all | two_body | none)");
  }
  m.gamma.assign(static_cast<std::size_t>(n_channels), gamma);
  return m;
}

void run_parallel(int count, int jobs, const std::function<void(int)>& job) {
  const int n_threads = std::max(1, std::min(jobs, count));
  if (n_threads == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

nlohmann::json parameters_to_json(const ParameterSet& p) {
  return {{"n_qubits", p.n_qubits},
          {"J", std::vector<double>(p.J.data(), p.J.data() + p.J.size())},
          {"gamma", std::vector<double>(p.gamma.data(), p.gamma.data() + p.gamma.size())}};
}

ParameterSet parameters_from_json(const nlohmann::json& j) {
  ParameterSet p;
  p.n_qubits = j.at("n_qubits").get<int>();
  const auto jv = j.at("J").get<std::vector<double>>();
  const auto gv = j.at("gamma").get<std::vector<double>>();
  p.J = Eigen::Map<const Eigen::VectorXd>(jv.data(), static_cast<Eigen::Index>(jv.size()));
  p.gamma = Eigen::Map<const Eigen::VectorXd>(gv.data(), static_cast<Eigen::Index>(gv.size()));
  p.validate();
  return p;
}

ParameterSet SingleQubitReference::pinnverse_values() {
  ParameterSet p = ParameterSet::zeros(1, 3);
  p.J << 0.0, 2.4e-2, -1.52, -1.08e-2;
  p.gamma << 1.26e-1, 7.89e-2, 4.39e-5;
  return p;
}

ParameterSet SingleQubitReference::analytic_values() {
  ParameterSet p = ParameterSet::zeros(1, 3);
  p.J << 0.0, 0.0, -1.57, 0.0;
  p.gamma << 1.28e-1, 6.5e-2, 1.33e-4;
  return p;
}

SyntheticData generate_data(const ExperimentConfig& config, std::uint64_t truth_seed, std::uint64_t noise_seed,
                            double sigma, int n_data) {
  const ChannelSet channels = ChannelSet::standard_for(config.n_qubits);
  SyntheticData out;
  if (!config.truth_path.empty()) {
    std::ifstream in(config.truth_path);
    out.truth = parameters_from_json(nlohmann::json::parse(in));
  } else if (config.n_qubits == 1) {
    out.truth = SingleQubitReference::pinnverse_values();
  } else {
    const ParameterMask mask = mask_from_name(config.truth_mask, config.n_qubits, channels.size(), true);
    out.truth = sample_random_parameters(config.n_qubits, truth_seed, mask, config.fit.omega0(), channels.size());
  }
  if (out.truth.n_qubits != config.n_qubits) throw std::invalid_argument("truth qubit count does not match config");
  DensityMatrix rho0 = plus_plus_state(config.n_qubits);
  out.clean = evolve(rho0, out.truth, channels, uniform_grid(config.fit.t_final, n_data));
  if (config.fit.s0) {
    // custom preparation: integrate in the Pauli basis from the given vector
    const ObservableBasis basis(config.n_qubits);
    const AffineGenerator gen = build_generator(out.truth, channels, basis);
    out.clean = evolve_pauli(gen, config.n_qubits, *config.fit.s0, uniform_grid(config.fit.t_final, n_data));
  }
  out.noisy = add_gaussian_noise(out.clean, sigma, noise_seed);
  return out;
}

SyntheticData run_gen_data(const ExperimentConfig& config) {
  config.validate();
  SyntheticData d = generate_data(config, stream_seed(config.seed, kTruthStream, 0),
                                  stream_seed(config.seed, kNoiseStream, 0), config.sigma, config.fit.n_data);
  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    write_trajectory_csv(config.out_dir + "/data.csv", d.noisy);
    write_trajectory_csv(config.out_dir + "/clean.csv", d.clean);
    write_json(config.out_dir + "/truth.json", parameters_to_json(d.truth));
    write_json(config.out_dir + "/config.json", config.to_json());
  }
  return d;
}

namespace {

FitConfig fit_config_for(const ExperimentConfig& config, int channels, std::uint64_t fit_seed) {
  FitConfig f = config.fit;
  f.seed = fit_seed;
  f.mask = mask_from_name(config.train_mask, config.n_qubits, channels, config.train_gamma);
  return f;
}

}  // namespace

FitReport run_fit(const ExperimentConfig& config) {
  config.validate();
  if (config.data_path.empty()) throw std::invalid_argument("fit: a data file is required (--data)");
  const Trajectory data = read_trajectory_csv(config.data_path);
  if (data.n_qubits != config.n_qubits) {
    throw std::invalid_argument("fit: data has " + std::to_string(data.n_qubits) + " qubit(s), config expects " +
                                std::to_string(config.n_qubits));
  }
  const ChannelSet channels = ChannelSet::standard_for(config.n_qubits);
  std::optional<ParameterSet> truth;
  if (!config.truth_path.empty()) {
    std::ifstream in(config.truth_path);
    truth = parameters_from_json(nlohmann::json::parse(in));
  }
  FitReport report = fit(data, channels, fit_config_for(config, channels.size(), config.seed), truth);
  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    write_json(config.out_dir + "/report.json", report_to_json(report));
    write_json(config.out_dir + "/config.json", config.to_json());
    write_trajectory_csv(config.out_dir + "/reconstruction.csv", report.reconstruction);
  }
  return report;
}

std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows) {
  std::vector<SweepSummary> out;
  std::map<std::pair<double, std::string>, std::vector<double>> ok_values;
  std::map<std::pair<double, std::string>, int> totals;
  std::vector<std::pair<double, std::string>> order;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.grid_value, r.group);
    if (totals.find(key) == totals.end()) order.push_back(key);
    ++totals[key];
    if (r.ok) ok_values[key].push_back(r.mape);
  }
  for (const auto& key : order) {
    SweepSummary s;
    s.grid_value = key.first;
    s.group = key.second;
    s.n_total = totals[key];
    const auto it = ok_values.find(key);
    if (it == ok_values.end() || it->second.empty()) {
      s.mean = s.min = s.max = s.median = std::numeric_limits<double>::quiet_NaN();
    } else {
      const auto& v = it->second;
      s.n_ok = static_cast<int>(v.size());
      double sum = 0.0;
      for (double x : v) sum += x;
      s.mean = sum / static_cast<double>(v.size());
      s.min = *std::min_element(v.begin(), v.end());
      s.max = *std::max_element(v.begin(), v.end());
      s.median = median_of(v);
    }
    out.push_back(s);
  }
  return out;
}

const SweepSummary* find_summary(const SweepResult& result, double grid_value, const std::string& group) {
  for (const auto& s : result.summary) {
    if (s.grid_value == grid_value && s.group == group) return &s;
  }
  return nullptr;
}

namespace {

struct SweepPoint {
  int n_data;
  double sigma;
  double grid_value;
};

using GroupFn = std::function<std::vector<std::pair<std::string, double>>(const ParameterSet&, const ParameterSet&)>;

SweepResult run_sweep(const ExperimentConfig& config, const std::string& grid_name,
                      const std::vector<SweepPoint>& points, const std::vector<std::string>& groups,
                      const GroupFn& group_mapes) {
  config.validate();
  const ChannelSet channels = ChannelSet::standard_for(config.n_qubits);
  const int n_real = config.realizations;
  const int n_jobs = static_cast<int>(points.size()) * n_real;

  SweepResult result;
  result.grid_name = grid_name;
  std::vector<std::vector<SweepRow>> job_rows(static_cast<std::size_t>(n_jobs));
  result.reports.resize(static_cast<std::size_t>(n_jobs));

  run_parallel(n_jobs, config.jobs, [&](int job) {
    const int gi = job / n_real;
    const int r = job % n_real;
    const SweepPoint& pt = points[static_cast<std::size_t>(gi)];
    auto& rows = job_rows[static_cast<std::size_t>(job)];
    nlohmann::json& rep = result.reports[static_cast<std::size_t>(job)];
    // the same realization index reuses its ground truth across grid points; the
    // other streams are keyed on the grid value so any sub-grid reproduces its rows
    const auto grid_key = std::bit_cast<std::uint64_t>(pt.grid_value);
    const std::uint64_t truth_seed = stream_seed(config.seed, kTruthStream, static_cast<std::uint64_t>(r));
    const std::uint64_t noise_seed = stream_seed(config.seed, kNoiseStream, grid_key, static_cast<std::uint64_t>(r));
    const std::uint64_t fit_seed = stream_seed(config.seed, kFitStream, grid_key, static_cast<std::uint64_t>(r));
    try {
      const SyntheticData d = generate_data(config, truth_seed, noise_seed, pt.sigma, pt.n_data);
      FitConfig fc = fit_config_for(config, channels.size(), fit_seed);
      fc.n_data = pt.n_data;
      const FitReport report = fit(d.noisy, channels, fc, d.truth);
      for (const auto& [group, value] : group_mapes(d.truth, report.recovered)) {
        rows.push_back({pt.grid_value, r, group, value, true, {}});
      }
      rep = report_to_json(report);
    } catch (const std::exception& e) {
      rows.clear();
      for (const auto& g : groups) {
        rows.push_back({pt.grid_value, r, g, std::numeric_limits<double>::quiet_NaN(), false, e.what()});
      }
      rep = {{"error", e.what()}};
    }
    rep["grid"] = {{"name", grid_name}, {"value", pt.grid_value}, {"realization", r}};
  });

  for (auto& rows : job_rows) {
    for (auto& row : rows) result.rows.push_back(std::move(row));
  }
  result.summary = summarize(result.rows);

  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir + "/runs");
    write_json(config.out_dir + "/config.json", config.to_json());
    for (int job = 0; job < n_jobs; ++job) {
      const int gi = job / n_real;
      write_json(config.out_dir + "/runs/" + grid_name + "_" + grid_label(points[static_cast<std::size_t>(gi)].grid_value) +
                     "_r" + std::to_string(job % n_real) + ".json",
                 result.reports[static_cast<std::size_t>(job)]);
    }
    write_sweep_rows_csv(config.out_dir + "/rows.csv", result);
    write_sweep_summary_csv(config.out_dir + "/summary.csv", result);
  }
  return result;
}

std::optional<double> group_mape(const Eigen::VectorXd& exact, const Eigen::VectorXd& pred) {
  if (mape_support(exact) == 0) return std::nullopt;
  return mape(exact, pred);
}

}  // namespace

SweepResult run_sweep_collocation(const ExperimentConfig& config) {
  const int n_channels = ChannelSet::standard_for(config.n_qubits).size();
  std::vector<SweepPoint> points;
  for (int n : config.nc_grid) points.push_back({n, config.sigma, static_cast<double>(n)});
  std::vector<std::string> groups{"J_mean"};
  for (int k = 0; k < n_channels; ++k) groups.push_back("gamma_" + std::to_string(k + 1));
  return run_sweep(config, "N_c", points, groups, [n_channels](const ParameterSet& truth, const ParameterSet& rec) {
    std::vector<std::pair<std::string, double>> out;
    const auto jm = group_mape(truth.J.tail(truth.J.size() - 1), rec.J.tail(rec.J.size() - 1));
    out.emplace_back("J_mean", jm.value_or(std::numeric_limits<double>::quiet_NaN()));
    for (int k = 0; k < n_channels; ++k) {
      const double g = truth.gamma[k];
      out.emplace_back("gamma_" + std::to_string(k + 1),
                       g == 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::abs(g - rec.gamma[k]) / g);
    }
    return out;
  });
}

SweepResult run_sweep_noise(const ExperimentConfig& config) {
  std::vector<SweepPoint> points;
  for (double s : config.sigma_grid) points.push_back({config.fit.n_data, s, s});
  return run_sweep(config, "sigma", points, {"J_mean", "gamma_mean"},
                   [](const ParameterSet& truth, const ParameterSet& rec) {
                     std::vector<std::pair<std::string, double>> out;
                     const double nan = std::numeric_limits<double>::quiet_NaN();
                     out.emplace_back("J_mean",
                                      group_mape(truth.J.tail(truth.J.size() - 1), rec.J.tail(rec.J.size() - 1))
                                          .value_or(nan));
                     out.emplace_back("gamma_mean", group_mape(truth.gamma, rec.gamma).value_or(nan));
                     return out;
                   });
}

void write_sweep_rows_csv(const std::string& path, const SweepResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << result.grid_name << ",realization,group,mape,ok\n" << std::setprecision(17);
  for (const auto& r : result.rows) {
    out << r.grid_value << ',' << r.realization << ',' << r.group << ',';
    if (r.ok) out << r.mape;
    out << ',' << (r.ok ? 1 : 0) << '\n';
  }
}

void write_sweep_summary_csv(const std::string& path, const SweepResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << result.grid_name << ",group,mean,min,max,median,n_ok,n_total\n" << std::setprecision(17);
  for (const auto& s : result.summary) {
    out << s.grid_value << ',' << s.group << ',' << s.mean << ',' << s.min << ',' << s.max << ',' << s.median << ','
        << s.n_ok << ',' << s.n_total << '\n';
  }
}

CrosstalkResult run_crosstalk(const ExperimentConfig& config) {
  config.validate();
  if (config.n_qubits != 2) throw std::invalid_argument("crosstalk: two qubits required");
  const ChannelSet channels = ChannelSet::two_qubit_standard();
  const SyntheticData d = generate_data(config, stream_seed(config.seed, kTruthStream, 0),
                                        stream_seed(config.seed, kNoiseStream, 0), config.sigma, config.fit.n_data);
  CrosstalkResult res;
  res.report = fit(d.noisy, channels, fit_config_for(config, channels.size(), config.seed), d.truth);

  auto stat = [&](const std::string& name, double truth, auto pick) {
    ParameterStat s{name, truth, pick(res.report.recovered), 0.0, std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};
    s.mape = std::abs(truth - s.recovered) / std::abs(truth);
    for (const auto& run : res.report.runs) {
      if (!run.ok) continue;
      const double m = std::abs(truth - pick(run.recovered)) / std::abs(truth);
      s.mape_min = std::min(s.mape_min, m);
      s.mape_max = std::max(s.mape_max, m);
    }
    return s;
  };
  for (int k = 0; k < channels.size(); ++k) {
    if (d.truth.gamma[k] == 0.0) continue;
    res.gamma_stats.push_back(
        stat("gamma_" + std::to_string(k + 1), d.truth.gamma[k], [k](const ParameterSet& p) { return p.gamma[k]; }));
  }
  Eigen::VectorXd tb_true(9), tb_pred(9);
  int n = 0;
  for (int mu = 1; mu < 4; ++mu) {
    for (int nu = 1; nu < 4; ++nu) {
      const double t = d.truth.j(mu, nu);
      tb_true[n] = t;
      tb_pred[n] = res.report.recovered.j(mu, nu);
      ++n;
      if (t == 0.0) continue;
      res.two_body_stats.push_back(stat(PauliString({mu, nu}).name(), t,
                                        [mu, nu](const ParameterSet& p) { return p.j(mu, nu); }));
    }
  }
  res.mape_j_two_body = group_mape(tb_true, tb_pred);
  res.mape_gamma = group_mape(d.truth.gamma, res.report.recovered.gamma);

  const Eigen::VectorXd dense = uniform_grid(config.fit.t_final, config.fit.n_physics);
  const Trajectory reference = evolve(plus_plus_state(2), d.truth, channels, dense);
  res.reconstruction_mape = reconstruction_mape(reference, reconstruct(res.report, dense, channels));
  res.metrics = ae_mae(d.noisy, reconstruct(res.report, d.noisy.times, channels));

  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    nlohmann::json j = report_to_json(res.report);
    nlohmann::json stats = nlohmann::json::array();
    for (const auto* group : {&res.gamma_stats, &res.two_body_stats}) {
      for (const auto& s : *group) {
        stats.push_back({{"name", s.name},
                         {"truth", s.truth},
                         {"recovered", s.recovered},
                         {"mape", s.mape},
                         {"mape_min", s.mape_min},
                         {"mape_max", s.mape_max}});
      }
    }
    j["crosstalk"] = {{"parameters", stats}, {"reconstruction_mape", res.reconstruction_mape}};
    write_json(config.out_dir + "/report.json", j);
    write_json(config.out_dir + "/config.json", config.to_json());
    write_trajectory_csv(config.out_dir + "/data.csv", d.noisy);
    write_trajectory_csv(config.out_dir + "/reconstruction.csv", reconstruct(res.report, d.noisy.times, channels));
  }
  return res;
}

SingleQubitResult run_single_qubit(const ExperimentConfig& config_in, const std::string& csv_path) {
  ExperimentConfig config = config_in;
  config.n_qubits = 1;
  config.validate();
  const ChannelSet channels = ChannelSet::one_qubit_finite_t();
  SingleQubitResult res;
  std::optional<ParameterSet> truth;
  if (!csv_path.empty()) {
    res.data = read_trajectory_csv(csv_path);
    if (res.data.n_qubits != 1) throw IngestionError("single-qubit mode expects columns t,sx,sy,sz", 1);
    config.fit.t_final = res.data.times[res.data.n_times() - 1];
    if (res.data.times[0] < 0.0) throw IngestionError("negative time", 2);
  } else {
    const SyntheticData d = generate_data(config, 0, stream_seed(config.seed, kNoiseStream, 0), config.sigma,
                                          config.fit.n_data);
    res.data = d.noisy;
    truth = d.truth;
    res.synthetic = true;
  }
  res.report = fit(res.data, channels, fit_config_for(config, channels.size(), config.seed), truth);
  res.model = reconstruct(res.report, res.data.times, channels);
  res.metrics = ae_mae(res.data, res.model);

  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    nlohmann::json j = report_to_json(res.report);
    j["single_qubit"] = {{"units", {{"J", "rad/us (quoted as MHz)"}, {"gamma", "1/us (quoted as MHz)"}, {"t", "us"}}},
                         {"mae", std::vector<double>(res.metrics.mae.data(), res.metrics.mae.data() + 3)},
                         {"synthetic", res.synthetic},
                         {"reference_pinnverse", parameters_to_json(SingleQubitReference::pinnverse_values())},
                         {"reference_analytic", parameters_to_json(SingleQubitReference::analytic_values())}};
    write_json(config.out_dir + "/report.json", j);
    write_json(config.out_dir + "/config.json", config.to_json());
    write_trajectory_csv(config.out_dir + "/model.csv", res.model);
    std::ofstream ae(config.out_dir + "/ae.csv");
    ae << "t,ae_sx,ae_sy,ae_sz\n" << std::setprecision(17);
    for (int c = 0; c < res.data.n_times(); ++c) {
      ae << res.data.times[c] << ',' << res.metrics.ae(0, c) << ',' << res.metrics.ae(1, c) << ','
         << res.metrics.ae(2, c) << '\n';
    }
  }
  return res;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

nlohmann::json strip_timing(nlohmann::json j) {
  if (j.is_object()) {
    j.erase("timing");
    for (auto& [k, v] : j.items()) v = strip_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timing(v);
  }
  return j;
}

}  // namespace pinnverse
