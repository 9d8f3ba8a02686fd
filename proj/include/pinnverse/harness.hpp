#pragma once

#include "pinnverse/lindblad.hpp"
#include "pinnverse/metrics.hpp"
#include "pinnverse/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pinnverse {

/// Everything a CLI run needs. Populated from a `key = value` file, then CLI flags.
struct ExperimentConfig {
  std::string mode;
  std::string out_dir;  // empty: keep results in memory only
  std::uint64_t seed = 1;
  int jobs = 1;
  int realizations = 8;
  int n_qubits = 2;
  std::vector<int> nc_grid{5, 10, 20, 40};
  std::vector<double> sigma_grid{0.0, 0.005, 0.01, 0.015, 0.02};
  double sigma = 0.0;
  /// Which J entries the synthetic ground truth populates: all | two_body | none.
  std::string truth_mask = "all";
  /// Which J entries are trained: all | two_body | none.
  std::string train_mask = "all";
  bool train_gamma = true;
  std::string data_path;
  std::string truth_path;
  FitConfig fit;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Applies `key = value` lines ('#' starts a comment). Unknown keys throw.
void apply_config_text(ExperimentConfig& config, const std::string& text);
void apply_config_file(ExperimentConfig& config, const std::string& path);
void apply_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Defaults per mode: T = 1 for two qubits, the single-qubit window otherwise.
ExperimentConfig default_config(const std::string& mode);

ParameterMask mask_from_name(const std::string& name, int n_qubits, int n_channels, bool gamma);

/// Runs `count` independent jobs on up to `jobs` threads. Results land in index order.
void run_parallel(int count, int jobs, const std::function<void(int)>& job);

nlohmann::json parameters_to_json(const ParameterSet& p);
ParameterSet parameters_from_json(const nlohmann::json& j);

// ---- gen-data / fit ---------------------------------------------------------

struct SyntheticData {
  ParameterSet truth;
  Trajectory clean;
  Trajectory noisy;
};

/// Ground truth for this config (published reference values in single-qubit mode, random otherwise),
/// integrated on the N_c grid, plus Gaussian noise at `sigma`.
SyntheticData generate_data(const ExperimentConfig& config, std::uint64_t truth_seed, std::uint64_t noise_seed,
                            double sigma, int n_data);

SyntheticData run_gen_data(const ExperimentConfig& config);
FitReport run_fit(const ExperimentConfig& config);

// ---- sweeps -----------------------------------------------------------------

struct SweepRow {
  double grid_value = 0.0;
  int realization = 0;
  std::string group;
  double mape = 0.0;
  bool ok = false;
  std::string error;
};

struct SweepSummary {
  double grid_value = 0.0;
  std::string group;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  int n_ok = 0;
  int n_total = 0;
};

struct SweepResult {
  std::string grid_name;
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;
  std::vector<nlohmann::json> reports;  // one per (grid point, realization), grid-major
};

/// Per N_c and realization: sample a truth, generate data, fit, record MAPE(J_mean) and MAPE(gamma_k).
SweepResult run_sweep_collocation(const ExperimentConfig& config);
/// Per sigma and realization at N_c = fit.n_data: record MAPE(J_mean) and MAPE(gamma_mean).
SweepResult run_sweep_noise(const ExperimentConfig& config);

/// Summary statistics over ok rows only.
std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows);
const SweepSummary* find_summary(const SweepResult& result, double grid_value, const std::string& group);

void write_sweep_rows_csv(const std::string& path, const SweepResult& result);
void write_sweep_summary_csv(const std::string& path, const SweepResult& result);

// ---- crosstalk / single qubit ----------------------------------------------

struct ParameterStat {
  std::string name;
  double truth = 0.0;
  double recovered = 0.0;
  double mape = 0.0;      // best restart
  double mape_min = 0.0;  // over ok restarts
  double mape_max = 0.0;
};

struct CrosstalkResult {
  FitReport report;
  std::vector<ParameterStat> gamma_stats;
  std::vector<ParameterStat> two_body_stats;
  std::optional<double> mape_j_two_body;
  std::optional<double> mape_gamma;
  double reconstruction_mape = 0.0;
  MetricSet metrics;  // reconstruction vs noisy data
};

CrosstalkResult run_crosstalk(const ExperimentConfig& config);

struct SingleQubitResult {
  FitReport report;
  Trajectory data;
  Trajectory model;
  MetricSet metrics;
  bool synthetic = false;
};

/// Reference values for the single-qubit device (MHz): the PINNverse fit reported
/// for the measured data and the analytic-model values it is compared against.
struct SingleQubitReference {
  static ParameterSet pinnverse_values();
  static ParameterSet analytic_values();
};

/// Fits `csv_path` if given, otherwise synthetic data from the reference parameters.
SingleQubitResult run_single_qubit(const ExperimentConfig& config, const std::string& csv_path);

/// Writes JSON to `path`, creating parent directories.
void write_json(const std::string& path, const nlohmann::json& j);

/// Drops the nondeterministic "timing" entries so reports can be compared bit-for-bit.
nlohmann::json strip_timing(nlohmann::json j);

}  // namespace pinnverse
