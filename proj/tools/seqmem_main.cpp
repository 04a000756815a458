// Command-line front end: one binary, one subcommand per task.
// Exit codes: 0 = success, 1 = usage/config error, 2 = numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "seqmem/analysis.hpp"
#include "seqmem/bases.hpp"
#include "seqmem/harness.hpp"
#include "seqmem/network.hpp"
#include "seqmem/solvers.hpp"

namespace {

using nlohmann::json;
using namespace seqmem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("JSON parse error in " + path + ": " + e.what());
  }
}

Eigen::MatrixXd json_to_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw std::invalid_argument(name + " must be a non-empty array of rows");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw std::invalid_argument(name + " rows must have equal length");
    for (std::size_t k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

Eigen::VectorXd json_to_vector(const json& j, const std::string& name) {
  if (!j.is_array()) throw std::invalid_argument(name + " must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

SolverOptions solver_from_json(const json& j) {
  SolverOptions opts;
  if (!j.is_object()) throw std::invalid_argument("\"solver\" must be an object");
  opts.max_iterations = j.value("max_iterations", opts.max_iterations);
  opts.relative_change_tolerance =
      j.value("relative_change_tolerance", opts.relative_change_tolerance);
  opts.continuation_steps = j.value("continuation_steps", opts.continuation_steps);
  opts.step_size_safety = j.value("step_size_safety", opts.step_size_safety);
  return opts;
}

void emit(const json& out, bool as_json) {
  if (as_json) {
    std::cout << out.dump(2) << "\n";
    return;
  }
  for (const auto& item : out.items()) {
    if (item.value().is_number_float())
      std::cout << item.key() << "=" << fmt(item.value().get<double>()) << "\n";
    else
      std::cout << item.key() << "=" << item.value().dump() << "\n";
  }
}

int run_simulate(const std::string& config_path, int trial_index) {
  TrialConfig config = load_trial_config(config_path);
  TrialResult result = run_trial(config, trial_index);
  json out{{"rmse", result.rmse},
           {"truth_norm", result.truth_norm},
           {"residual_norm", result.residual_norm},
           {"converged", result.converged},
           {"iterations_used", result.iterations_used},
           {"trial_seed", result.trial_seed}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_recover_sparse(const std::string& instance_path) {
  json instance = read_json_file(instance_path);
  Eigen::MatrixXd a_eff = json_to_matrix(instance.at("matrix"), "matrix");
  Eigen::VectorXd x = json_to_vector(instance.at("observation"), "observation");
  SolverOptions opts;
  if (instance.contains("solver")) opts = solver_from_json(instance.at("solver"));
  opts.residual_target = instance.value("epsilon", 0.0);
  RecoveryResult result = solve_l1(a_eff, x, opts);
  json out{{"estimate", vector_to_json(result.estimate)},
           {"residual_norm", result.residual_norm},
           {"iterations_used", result.iterations_used},
           {"converged", result.converged},
           {"objective_value", result.objective_value}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_recover_lowrank(const std::string& instance_path) {
  json instance = read_json_file(instance_path);
  MeasurementOperator op;
  op.streams = instance.at("streams").get<int>();
  op.horizon = instance.at("horizon").get<int>();
  op.matrix = json_to_matrix(instance.at("matrix"), "matrix");
  op.nodes = static_cast<int>(op.matrix.rows());
  if (op.matrix.cols() != static_cast<Eigen::Index>(op.streams) * op.horizon)
    throw std::invalid_argument("matrix must have streams * horizon columns");
  Eigen::VectorXd x = json_to_vector(instance.at("observation"), "observation");
  SolverOptions opts;
  if (instance.contains("solver")) opts = solver_from_json(instance.at("solver"));
  opts.residual_target = instance.value("epsilon", 0.0);

  Eigen::MatrixXd b = history_operator_matrix(op);
  auto forward = [&b](const Eigen::MatrixXd& s) {
    return Eigen::VectorXd(b * Eigen::Map<const Eigen::VectorXd>(s.data(), s.size()));
  };
  auto adjoint_map = [&b, &op](const Eigen::VectorXd& u) {
    Eigen::VectorXd v = b.transpose() * u;
    return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data(), op.streams, op.horizon));
  };
  MatrixRecoveryResult result = solve_nuclear(forward, adjoint_map, x, op.streams, op.horizon, opts);
  json out{{"estimate", matrix_to_json(result.estimate)},
           {"residual_norm", result.residual_norm},
           {"iterations_used", result.iterations_used},
           {"converged", result.converged},
           {"objective_value", result.objective_value}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_phase_diagram(const std::string& config_path, const std::string& out_dir, int workers) {
  GridConfig config = load_grid_config(config_path);
  PhaseGrid grid = phase_diagram(config, workers);
  std::filesystem::create_directories(out_dir);
  write_grid_csv(grid, out_dir + "/grid.csv");
  write_grid_pgm(grid, out_dir + "/grid.pgm");
  for (const PhaseCell& cell : grid.cells)
    if (cell.n_converged == 0)
      std::cerr << "warning: no converged trials in cell dim=" << cell.dim_value
                << " M=" << cell.nodes << "\n";
  return 0;
}

int run_coherence(const std::string& basis_kind, int n, int oversample, bool as_json) {
  OrthonormalBasis basis = make_basis(basis_kind, n);
  CoherenceReport report = coherence_single(basis, oversample);
  emit(json{{"basis", basis_kind},
            {"n", n},
            {"mu", report.mu},
            {"argmax_t", report.argmax_t},
            {"oversample", report.oversample}},
       as_json);
  return 0;
}

int run_rip_estimate(int nodes, int streams, int horizon, const std::string& mode,
                     std::uint64_t net_seed, const std::string& basis_kind, int sparsity,
                     int samples, std::uint64_t seed, bool as_json) {
  NetworkSpec spec;
  spec.nodes = nodes;
  spec.streams = streams;
  spec.horizon = horizon;
  spec.seed = net_seed;
  spec.mode = parse_connectivity_mode(mode);
  MeasurementOperator op = build_operator(build_network(spec));
  JointBasis jb = joint_basis(make_basis(basis_kind, horizon), streams);
  Eigen::MatrixXd a_eff = right_multiply_joint(op.matrix, jb);
  RipEstimate estimate = estimate_rip_delta(a_eff, sparsity, samples, seed);
  emit(json{{"delta_hat", estimate.delta_hat},
            {"scale_c", estimate.scale_c},
            {"samples", estimate.samples},
            {"seed", estimate.seed}},
       as_json);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrent-network sequence memory: simulation, recovery, and diagnostics"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run one recovery trial from a config file");
  std::string sim_config;
  int sim_trial = 0;
  simulate->add_option("--config", sim_config, "trial config JSON file")->required();
  simulate->add_option("--trial", sim_trial, "trial index (default 0)");

  // recover-sparse
  auto* rec_sparse = app.add_subcommand("recover-sparse", "l1 recovery on a stored instance");
  std::string sparse_instance;
  rec_sparse->add_option("--instance", sparse_instance, "instance JSON file")->required();

  // recover-lowrank
  auto* rec_lowrank =
      app.add_subcommand("recover-lowrank", "nuclear-norm recovery on a stored instance");
  std::string lowrank_instance;
  rec_lowrank->add_option("--instance", lowrank_instance, "instance JSON file")->required();

  // phase-diagram
  auto* phase = app.add_subcommand("phase-diagram", "sweep a recovery grid, write CSV and PGM");
  std::string phase_config, phase_out;
  int phase_workers = 0;
  phase->add_option("--config", phase_config, "grid config JSON file")->required();
  phase->add_option("--out", phase_out, "output directory")->required();
  phase->add_option("--workers", phase_workers, "worker threads (default: hardware)");

  // coherence
  auto* coherence = app.add_subcommand("coherence", "basis coherence over the frequency grid");
  std::string coh_basis;
  int coh_n = 0;
  int coh_oversample = 8;
  bool coh_json = false;
  coherence->add_option("--basis", coh_basis, "canonical | dct | haar")->required();
  coherence->add_option("--n", coh_n, "basis size")->required();
  coherence->add_option("--oversample", coh_oversample, "grid oversampling factor (default 8)");
  coherence->add_flag("--json", coh_json, "emit JSON instead of key=value lines");

  // rip-estimate
  auto* rip = app.add_subcommand("rip-estimate", "empirical restricted-isometry constant");
  int rip_nodes = 0, rip_streams = 1, rip_horizon = 1, rip_sparsity = 1, rip_samples = 50;
  std::string rip_mode = "spectral", rip_basis = "canonical";
  std::uint64_t rip_net_seed = 0, rip_seed = 0;
  bool rip_json = false;
  rip->add_option("--nodes", rip_nodes, "network nodes M")->required();
  rip->add_option("--streams", rip_streams, "input streams L")->required();
  rip->add_option("--horizon", rip_horizon, "history length N")->required();
  rip->add_option("--mode", rip_mode, "spectral | orthogonalized-gaussian");
  rip->add_option("--net-seed", rip_net_seed, "network seed");
  rip->add_option("--basis", rip_basis, "sparsity basis kind");
  rip->add_option("--sparsity", rip_sparsity, "K; supports have size 2K")->required();
  rip->add_option("--samples", rip_samples, "number of random supports (default 50)");
  rip->add_option("--seed", rip_seed, "support sampling seed");
  rip->add_flag("--json", rip_json, "emit JSON instead of key=value lines");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "capacity and error-bound calculator");
  std::string which;
  double b_c = 1.0, b_delta = 0.5, b_mu = 1.0, b_eta = 1.0 / M_E, b_alpha = 1.0, b_beta = 1.0,
         b_noise = 0.0, b_tail = 0.0;
  int b_sparsity = 1, b_rank = 1, b_streams = 1, b_horizon = 1, b_nodes = 1;
  bool bounds_json = false;
  bounds
      ->add_option("--which", which,
                   "sparse-capacity | lowrank-capacity | sparse-error | lowrank-error")
      ->required();
  bounds->add_option("--c-const", b_c, "universal constant (default 1)");
  bounds->add_option("--sparsity", b_sparsity, "K");
  bounds->add_option("--rank", b_rank, "R");
  bounds->add_option("--delta", b_delta, "isometry constant");
  bounds->add_option("--mu", b_mu, "coherence (joint or low-rank)");
  bounds->add_option("--eta", b_eta, "failure probability (default 1/e)");
  bounds->add_option("--streams", b_streams, "L");
  bounds->add_option("--horizon", b_horizon, "N");
  bounds->add_option("--nodes", b_nodes, "M");
  bounds->add_option("--alpha", b_alpha, "noise multiplier");
  bounds->add_option("--beta", b_beta, "tail multiplier");
  bounds->add_option("--noise-norm", b_noise, "noise level");
  bounds->add_option("--tail-l1", b_tail, "l1 tail of best sparse approximation");
  bounds->add_flag("--json", bounds_json, "emit JSON instead of key=value lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*simulate) return run_simulate(sim_config, sim_trial);
    if (*rec_sparse) return run_recover_sparse(sparse_instance);
    if (*rec_lowrank) return run_recover_lowrank(lowrank_instance);
    if (*phase) return run_phase_diagram(phase_config, phase_out, phase_workers);
    if (*coherence) return run_coherence(coh_basis, coh_n, coh_oversample, coh_json);
    if (*rip)
      return run_rip_estimate(rip_nodes, rip_streams, rip_horizon, rip_mode, rip_net_seed,
                              rip_basis, rip_sparsity, rip_samples, rip_seed, rip_json);
    if (*bounds) {
      double value = 0.0;
      if (which == "sparse-capacity")
        value = required_nodes_sparse(b_c, b_sparsity, b_delta, b_mu, b_streams, b_horizon, b_eta);
      else if (which == "lowrank-capacity")
        value = required_nodes_lowrank(b_c, b_rank, b_mu, b_streams, b_horizon);
      else if (which == "sparse-error")
        value = sparse_error_bound(b_alpha, b_beta, b_noise, b_tail, b_sparsity);
      else if (which == "lowrank-error")
        value = lowrank_error_bound(b_streams, b_horizon, b_nodes, b_noise);
      else
        throw std::invalid_argument("unknown bound \"" + which + "\"");
      emit(json{{"which", which}, {"value", value}}, bounds_json);
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
