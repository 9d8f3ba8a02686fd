// Command-line front end: one subcommand per experiment.

#include "pinnverse/harness.hpp"
#include "pinnverse/liouvillian.hpp"
#include "pinnverse/trajectory_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace pinnverse;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "base seed (u64)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--set", f.overrides, "config override, key=value (repeatable)");
}

ExperimentConfig resolve(const std::string& mode, const CommonFlags& f) {
  ExperimentConfig c = default_config(mode);
  if (!f.config_path.empty()) apply_config_file(c, f.config_path);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    apply_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out_dir = *f.out;
  if (f.jobs) c.jobs = *f.jobs;
  c.mode = mode;
  return c;
}

void print_parameters(const std::string& label, const ParameterSet& p) {
  std::printf("%s\n", label.c_str());
  const ObservableBasis basis(p.n_qubits);
  for (int a = 0; a < basis.size(); ++a) {
    const int idx = basis.string(a).index();
    if (p.J[idx] != 0.0) std::printf("  J[%s] = % .6g\n", basis.string(a).name().c_str(), p.J[idx]);
  }
  for (Eigen::Index k = 0; k < p.gamma.size(); ++k) std::printf("  gamma_%d = %.6g\n", int(k + 1), p.gamma[k]);
}

void print_summary(const SweepResult& r) {
  std::printf("%-8s %-10s %12s %12s %12s %12s %6s\n", r.grid_name.c_str(), "group", "mean", "median", "min", "max",
              "ok");
  for (const auto& s : r.summary) {
    std::printf("%-8g %-10s %12.4e %12.4e %12.4e %12.4e %3d/%-3d\n", s.grid_value, s.group.c_str(), s.mean, s.median,
                s.min, s.max, s.n_ok, s.n_total);
  }
}

void print_stat(const ParameterStat& s) {
  std::printf("  %-8s truth % .5g  fit % .5g  MAPE %.3e  [restarts %.3e .. %.3e]\n", s.name.c_str(), s.truth,
              s.recovered, s.mape, s.mape_min, s.mape_max);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pinnverse: identify Lindblad parameters of open qubit systems"};
  app.require_subcommand(1);

  CommonFlags gen_f, fit_f, nc_f, noise_f, xt_f, sq_f;
  double gen_sigma = -1.0;
  int gen_n = 0;
  std::string generator_csv;
  std::string fit_data, fit_truth, fit_checkpoint;
  std::string sq_data;

  auto* gen = app.add_subcommand("gen-data", "simulate a trajectory from random or given parameters");
  add_common(gen, gen_f);
  gen->add_option("--sigma", gen_sigma, "Gaussian noise standard deviation");
  gen->add_option("--n-data", gen_n, "number of equally spaced samples on [0, T]");
  gen->add_option("--generator", generator_csv, "also dump the Pauli-basis generator (A, b) as CSV");

  auto* fitc = app.add_subcommand("fit", "fit parameters to a trajectory CSV");
  add_common(fitc, fit_f);
  fitc->add_option("--data", fit_data, "trajectory CSV")->check(CLI::ExistingFile);
  fitc->add_option("--truth", fit_truth, "ground-truth parameters JSON, for error reporting")->check(CLI::ExistingFile);
  fitc->add_option("--checkpoint", fit_checkpoint, "write the trained network here");

  auto* nc = app.add_subcommand("sweep-collocation", "recovery error versus N_c");
  add_common(nc, nc_f);
  auto* noise = app.add_subcommand("sweep-noise", "recovery error versus noise level");
  add_common(noise, noise_f);
  auto* xt = app.add_subcommand("crosstalk", "two-qubit crosstalk identification");
  add_common(xt, xt_f);
  auto* sq = app.add_subcommand("single-qubit", "single-qubit fit (measured CSV or synthetic)");
  add_common(sq, sq_f);
  sq->add_option("--data", sq_data, "CSV with header t,sx,sy,sz (microseconds)")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      ExperimentConfig c = resolve("gen-data", gen_f);
      if (gen_sigma >= 0.0) c.sigma = gen_sigma;
      if (gen_n > 0) c.fit.n_data = gen_n;
      const SyntheticData d = run_gen_data(c);
      if (c.out_dir.empty()) {
        write_trajectory_csv(std::cout, d.noisy);
      } else {
        std::printf("wrote %d samples to %s/data.csv\n", d.noisy.n_times(), c.out_dir.c_str());
      }
      if (!generator_csv.empty()) {
        const ObservableBasis basis(c.n_qubits);
        std::ofstream out(generator_csv);
        write_generator_csv(out, build_generator(d.truth, ChannelSet::standard_for(c.n_qubits), basis), basis);
      }
      print_parameters("truth:", d.truth);
    } else if (*fitc) {
      ExperimentConfig c = resolve("fit", fit_f);
      if (!fit_data.empty()) c.data_path = fit_data;
      if (!fit_truth.empty()) c.truth_path = fit_truth;
      const FitReport r = run_fit(c);
      print_parameters("recovered:", r.recovered);
      if (r.errors && r.errors->mape_j) std::printf("MAPE(J) %.4e\n", *r.errors->mape_j);
      if (r.errors && r.errors->mape_gamma) std::printf("MAPE(gamma) %.4e\n", *r.errors->mape_gamma);
      if (!fit_checkpoint.empty()) save_checkpoint(r.network, fit_checkpoint);
      if (!c.out_dir.empty()) save_checkpoint(r.network, c.out_dir + "/checkpoint.json");
    } else if (*nc) {
      print_summary(run_sweep_collocation(resolve("sweep-collocation", nc_f)));
    } else if (*noise) {
      print_summary(run_sweep_noise(resolve("sweep-noise", noise_f)));
    } else if (*xt) {
      const CrosstalkResult r = run_crosstalk(resolve("crosstalk", xt_f));
      std::printf("decay rates:\n");
      for (const auto& s : r.gamma_stats) print_stat(s);
      std::printf("two-body couplings:\n");
      for (const auto& s : r.two_body_stats) print_stat(s);
      if (r.mape_j_two_body) std::printf("MAPE(J two-body) %.4e\n", *r.mape_j_two_body);
      if (r.mape_gamma) std::printf("MAPE(gamma) %.4e\n", *r.mape_gamma);
      std::printf("reconstruction MAPE %.4e\n", r.reconstruction_mape);
    } else if (*sq) {
      const SingleQubitResult r = run_single_qubit(resolve("single-qubit", sq_f), sq_data);
      print_parameters(r.synthetic ? "recovered (synthetic data):" : "recovered:", r.report.recovered);
      print_parameters("reference fit:", SingleQubitReference::pinnverse_values());
      print_parameters("analytic model:", SingleQubitReference::analytic_values());
      std::printf("MAE sx %.3e  sy %.3e  sz %.3e\n", r.metrics.mae[0], r.metrics.mae[1], r.metrics.mae[2]);
    }
  } catch (const IngestionError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
