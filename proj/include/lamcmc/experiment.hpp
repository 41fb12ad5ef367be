#pragma once

#include "lamcmc/driver.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lamcmc {

/// Invalid or unreadable experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemConfig {
  std::string target = "quartic";  // quartic | gaussian | banana | subprocess
  double latency_ms = 0.0;
  Matrix cov;                       // gaussian target covariance
  Vector data;                      // banana / forward subprocess data
  double noise_sd = 0.1;            // banana / forward subprocess noise
  std::vector<std::string> command; // subprocess argv
  std::size_t dim = 0;              // subprocess input dimension
  std::string flavor = "log_density";  // subprocess: log_density | forward
};

struct ExperimentConfig {
  ProblemConfig problem;
  ProposalSpec proposal;
  RefinementPolicy refinement;
  std::optional<std::size_t> n_points;  // local fit size; default from the dimension
  double cond_threshold = 1e8;
  RunPlan run;
  bool burn_in_set = false;  // otherwise 10% of steps
  std::optional<Matrix> reference_cov;
};

/// Parses a JSON document with sections problem, proposal, refinement, run.
/// Unknown keys and type errors raise ConfigError naming the offending path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

ProposalFamily parse_family(const std::string& name);
Mode parse_mode(const std::string& name);

TargetProblem build_problem(const ProblemConfig& config);
KernelConfig build_kernel_config(const ExperimentConfig& config, std::size_t dim);

/// Reference covariance for the error trace: explicit, or known for the
/// built-in quartic and Gaussian targets.
std::optional<Matrix> reference_covariance(const ExperimentConfig& config);

struct ExperimentSummary {
  RunResult result;
  std::optional<double> final_err_sq;
  double min_ess = 0.0;
};

/// Runs the plan and writes chain_<i>.csv, run.json, diagnostics.json,
/// error_vs_evals.csv and (local approximation) store.csv into `out_dir`.
ExperimentSummary run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir);

}  // namespace lamcmc
