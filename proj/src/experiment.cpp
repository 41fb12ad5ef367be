#include "lamcmc/experiment.hpp"

#include "lamcmc/diagnostics.hpp"
#include "lamcmc/subprocess_model.hpp"
#include "lamcmc/targets.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace lamcmc {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError(path + "." + key + ": unknown key");
}

template <class T>
T get(const json& obj, const std::string& path, const std::string& key) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

Vector to_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(path + ": expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix to_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector row = to_vector(j[r], path);
    if (static_cast<std::size_t>(row.size()) != cols) throw ConfigError(path + ": ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::string family_name(ProposalFamily f) {
  switch (f) {
    case ProposalFamily::am: return "am";
    case ProposalFamily::mala: return "mala";
    case ProposalFamily::mmala: return "mmala";
  }
  return "?";
}

json stats_json(const ChainStats& s) {
  return {{"steps", s.steps},
          {"accepted", s.accepted},
          {"refinements", s.refinements},
          {"random_refinements", s.random_refinements},
          {"cv_refinements", s.cv_refinements},
          {"conditioning_refinements", s.conditioning_refinements},
          {"dedup_rejections", s.dedup_rejections},
          {"model_evals", s.model_evals},
          {"initial_evals", s.initial_evals},
          {"gradient_evals", s.gradient_evals},
          {"max_retries", s.max_retries}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

}  // namespace

ProposalFamily parse_family(const std::string& name) {
  if (name == "am") return ProposalFamily::am;
  if (name == "mala") return ProposalFamily::mala;
  if (name == "mmala") return ProposalFamily::mmala;
  throw ConfigError("proposal family must be am, mala or mmala (got '" + name + "')");
}

Mode parse_mode(const std::string& name) {
  if (name == "exact") return Mode::exact;
  if (name == "la" || name == "local_approx") return Mode::local_approx;
  throw ConfigError("mode must be exact or la (got '" + name + "')");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check_keys(root, "config", {"problem", "proposal", "refinement", "run"});
  ExperimentConfig cfg;

  if (root.contains("problem")) {
    const json& p = root["problem"];
    check_keys(p, "problem",
               {"target", "latency_ms", "cov", "data", "noise_sd", "command", "dim", "flavor"});
    auto& pc = cfg.problem;
    if (p.contains("target")) pc.target = get<std::string>(p, "problem", "target");
    if (p.contains("latency_ms")) pc.latency_ms = get<double>(p, "problem", "latency_ms");
    if (p.contains("cov")) pc.cov = to_matrix(p["cov"], "problem.cov");
    if (p.contains("data")) pc.data = to_vector(p["data"], "problem.data");
    if (p.contains("noise_sd")) pc.noise_sd = get<double>(p, "problem", "noise_sd");
    if (p.contains("command")) pc.command = get<std::vector<std::string>>(p, "problem", "command");
    if (p.contains("dim")) pc.dim = get<std::size_t>(p, "problem", "dim");
    if (p.contains("flavor")) pc.flavor = get<std::string>(p, "problem", "flavor");
    static const std::set<std::string> targets{"quartic", "gaussian", "banana", "subprocess"};
    if (!targets.count(pc.target)) throw ConfigError("problem.target: unknown target '" + pc.target + "'");
    if (pc.latency_ms < 0) throw ConfigError("problem.latency_ms: must be non-negative");
    if (!(pc.noise_sd > 0)) throw ConfigError("problem.noise_sd: must be positive");
    if (pc.target == "gaussian" && pc.cov.size() == 0)
      throw ConfigError("problem.cov: required for the gaussian target");
    if (pc.target == "subprocess" && (pc.command.empty() || pc.dim == 0))
      throw ConfigError("problem.command/problem.dim: required for the subprocess target");
    if (pc.flavor != "log_density" && pc.flavor != "forward")
      throw ConfigError("problem.flavor: must be log_density or forward");
  }

  if (root.contains("proposal")) {
    const json& p = root["proposal"];
    check_keys(p, "proposal",
               {"family", "step_size", "hessian_floor", "am_adapt_start", "am_jitter", "am_scale"});
    auto& ps = cfg.proposal;
    if (p.contains("family")) ps.family = parse_family(get<std::string>(p, "proposal", "family"));
    if (p.contains("step_size")) ps.step_size = get<double>(p, "proposal", "step_size");
    if (p.contains("hessian_floor")) ps.hessian_floor = get<double>(p, "proposal", "hessian_floor");
    if (p.contains("am_adapt_start")) ps.am.adapt_start = get<std::size_t>(p, "proposal", "am_adapt_start");
    if (p.contains("am_jitter")) ps.am.jitter = get<double>(p, "proposal", "am_jitter");
    if (p.contains("am_scale")) ps.am.scale = get<double>(p, "proposal", "am_scale");
  }

  if (root.contains("refinement")) {
    const json& r = root["refinement"];
    check_keys(r, "refinement",
               {"beta_scale", "beta_exp", "gamma_scale", "gamma_exp", "max_refinements_per_step",
                "candidate_count", "n_points", "cond_threshold"});
    auto& rp = cfg.refinement;
    if (r.contains("beta_scale")) rp.beta_scale = get<double>(r, "refinement", "beta_scale");
    if (r.contains("beta_exp")) rp.beta_exp = get<double>(r, "refinement", "beta_exp");
    if (r.contains("gamma_scale")) rp.gamma_scale = get<double>(r, "refinement", "gamma_scale");
    if (r.contains("gamma_exp")) rp.gamma_exp = get<double>(r, "refinement", "gamma_exp");
    if (r.contains("max_refinements_per_step"))
      rp.max_refinements_per_step = get<std::size_t>(r, "refinement", "max_refinements_per_step");
    if (r.contains("candidate_count"))
      rp.candidate_count = get<std::size_t>(r, "refinement", "candidate_count");
    if (r.contains("n_points")) cfg.n_points = get<std::size_t>(r, "refinement", "n_points");
    if (r.contains("cond_threshold")) cfg.cond_threshold = get<double>(r, "refinement", "cond_threshold");
  }

  if (root.contains("run")) {
    const json& r = root["run"];
    check_keys(r, "run",
               {"mode", "chains", "steps", "burn_in", "seed", "initial_design", "initial_points",
                "reference_cov"});
    auto& rp = cfg.run;
    if (r.contains("mode")) rp.mode = parse_mode(get<std::string>(r, "run", "mode"));
    if (r.contains("chains")) rp.n_chains = get<std::size_t>(r, "run", "chains");
    if (r.contains("steps")) rp.steps = get<std::size_t>(r, "run", "steps");
    if (r.contains("burn_in")) {
      rp.burn_in = get<std::size_t>(r, "run", "burn_in");
      cfg.burn_in_set = true;
    }
    if (r.contains("seed")) rp.seed = get<std::uint64_t>(r, "run", "seed");
    if (r.contains("initial_design")) rp.initial_design = get<std::size_t>(r, "run", "initial_design");
    if (r.contains("initial_points")) {
      const json& pts = r["initial_points"];
      if (!pts.is_array()) throw ConfigError("run.initial_points: expected an array");
      for (const auto& pt : pts) rp.initial_points.push_back(to_vector(pt, "run.initial_points"));
    }
    if (r.contains("reference_cov")) cfg.reference_cov = to_matrix(r["reference_cov"], "run.reference_cov");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

TargetProblem build_problem(const ProblemConfig& pc) {
  const auto latency = std::chrono::microseconds(static_cast<long long>(pc.latency_ms * 1000.0));
  if (pc.target == "quartic") return targets::quartic(latency);
  if (pc.target == "gaussian") {
    if (pc.cov.rows() != pc.cov.cols()) throw ConfigError("problem.cov: must be square");
    return targets::gaussian(pc.cov, latency);
  }
  if (pc.target == "banana") {
    Vector data = pc.data;
    if (data.size() == 0) data = Vector::Zero(2);
    if (data.size() != 2) throw ConfigError("problem.data: banana needs 2 values");
    return targets::banana(data, pc.noise_sd, latency);
  }
  const std::size_t d = pc.dim;
  GaussianPrior prior{Vector::Zero(static_cast<Eigen::Index>(d)),
                      Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))};
  if (pc.flavor == "log_density")
    return TargetProblem::log_density(
        d, targets::with_latency(SubprocessModel::make(pc.command, 1), latency), prior);
  const auto m = static_cast<std::size_t>(pc.data.size());
  if (m == 0) throw ConfigError("problem.data: required for a forward subprocess model");
  const Matrix noise = pc.noise_sd * pc.noise_sd * Matrix::Identity(pc.data.size(), pc.data.size());
  return TargetProblem::forward(d, targets::with_latency(SubprocessModel::make(pc.command, m), latency),
                                pc.data, noise, prior);
}

KernelConfig build_kernel_config(const ExperimentConfig& cfg, std::size_t dim) {
  KernelConfig k;
  k.mode = cfg.run.mode;
  k.fit = LocalFitConfig::defaults(dim);
  if (cfg.n_points) k.fit.n_points = *cfg.n_points;
  k.fit.cond_threshold = cfg.cond_threshold;
  k.proposal = cfg.proposal;
  k.policy = cfg.refinement;
  try {
    k.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return k;
}

std::optional<Matrix> reference_covariance(const ExperimentConfig& cfg) {
  if (cfg.reference_cov) return cfg.reference_cov;
  if (cfg.problem.target == "quartic") return diagnostics::quartic_reference();
  if (cfg.problem.target == "gaussian") return cfg.problem.cov;
  return std::nullopt;
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg_in,
                                 const std::filesystem::path& out_dir) {
  ExperimentConfig cfg = cfg_in;
  if (!cfg.burn_in_set) cfg.run.burn_in = cfg.run.steps / 10;
  try {
    cfg.run.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("run: ") + e.what());
  }
  const TargetProblem problem = build_problem(cfg.problem);
  const KernelConfig kernel = build_kernel_config(cfg, problem.dim());
  const auto reference = reference_covariance(cfg);
  if (reference && reference->rows() != static_cast<Eigen::Index>(problem.dim()))
    throw ConfigError("run.reference_cov: dimension does not match the problem");

  std::filesystem::create_directories(out_dir);
  ExperimentSummary summary;
  summary.result = run_parallel(cfg.run, problem, kernel);
  const RunResult& res = summary.result;
  const std::size_t burn_in = cfg.run.burn_in;
  const bool la = cfg.run.mode == Mode::local_approx;

  for (const auto& c : res.chains) {
    std::ostringstream os;
    write_trajectory_csv(os, c);
    write_file(out_dir / ("chain_" + std::to_string(c.chain) + ".csv"), os.str());
  }
  if (res.store) {
    std::ostringstream os;
    res.store->write_csv(os);
    write_file(out_dir / "store.csv", os.str());
  }

  json diag;
  diag["burn_in"] = burn_in;
  diag["chain_length"] = cfg.run.steps;
  diag["n_chains"] = cfg.run.n_chains;
  diag["total_model_evaluations"] = res.total_model_evaluations();
  diag["design_evaluations"] = res.design_evaluations;
  const std::size_t post = cfg.run.steps - burn_in;
  json ess_chains = json::array();
  double ess_total = 0.0;
  std::vector<Matrix> blocks;
  if (post >= 2) {
    for (const auto& c : res.chains) blocks.push_back(diagnostics::post_burn_in(c, burn_in));
    if (post >= 100) {
      double min_ess = std::numeric_limits<double>::infinity();
      for (const auto& b : blocks) {
        const auto e = diagnostics::ess(b);
        ess_chains.push_back({{"per_coordinate", vector_json(e.per_coordinate)}, {"min", e.min}});
        ess_total += e.min;
        min_ess = std::min(min_ess, e.min);
      }
      summary.min_ess = min_ess;
      diag["ess"] = {{"per_chain", ess_chains}, {"pooled", ess_total}};
    }
    diag["pooled_cov"] = matrix_json(diagnostics::pooled_covariance(blocks));
  }

  std::ostringstream csv;
  csv.precision(17);
  csv << "evals,wall_s,err_sq,mode,chains\n";
  if (reference && post >= problem.dim() + 1) {
    diag["reference_cov"] = matrix_json(*reference);
    const auto trace = diagnostics::covariance_error_trace(res.chains, *reference, burn_in,
                                                           res.design_evaluations);
    json jt = json::array();
    for (const auto& p : trace) {
      jt.push_back({{"samples_per_chain", p.samples_per_chain},
                    {"evals", p.evaluations},
                    {"wall_s", p.wall_seconds},
                    {"err_sq", p.err_sq}});
      csv << p.evaluations << ',' << p.wall_seconds << ',' << p.err_sq << ','
          << (la ? "la" : "exact") << ',' << cfg.run.n_chains << '\n';
    }
    diag["err_trace"] = jt;
    if (!trace.empty()) summary.final_err_sq = trace.back().err_sq;
  }
  write_file(out_dir / "error_vs_evals.csv", csv.str());
  write_file(out_dir / "diagnostics.json", diag.dump(2) + "\n");

  json run;
  run["seed"] = cfg.run.seed;
  run["mode"] = la ? "la" : "exact";
  run["n_chains"] = cfg.run.n_chains;
  run["steps"] = cfg.run.steps;
  run["burn_in"] = burn_in;
  run["target"] = cfg.problem.target;
  run["proposal"] = {{"family", family_name(kernel.proposal.family)},
                     {"step_size", kernel.proposal.step_size},
                     {"hessian_floor", kernel.proposal.hessian_floor}};
  run["local_fit"] = {{"n_points", kernel.fit.n_points},
                      {"cond_threshold", kernel.fit.cond_threshold}};
  run["wall_seconds"] = res.wall_seconds;
  run["final_store_size"] = res.store ? res.store->size() : 0;
  run["design_evaluations"] = res.design_evaluations;
  run["design_inserted"] = res.design_inserted;
  json chains = json::array();
  for (const auto& c : res.chains)
    chains.push_back({{"chain", c.chain},
                      {"wall_seconds", c.wall_seconds.back()},
                      {"stats", stats_json(c.stats)}});
  run["chains"] = chains;
  write_file(out_dir / "run.json", run.dump(2) + "\n");
  return summary;
}

}  // namespace lamcmc
