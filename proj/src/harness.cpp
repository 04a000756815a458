#include "seqmem/harness.hpp"

#include "seqmem/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace seqmem {
namespace {

using nlohmann::json;

// Sub-stream tags for derive_seed (see rng.hpp): one per independent random
// draw so trials, cells and the draws inside a trial never share a stream.
constexpr std::uint64_t kTrialStream = 21;
constexpr std::uint64_t kNetworkStream = 22;
constexpr std::uint64_t kInputStream = 23;
constexpr std::uint64_t kNoiseStream = 24;
constexpr std::uint64_t kCellStream = 25;
constexpr std::uint64_t kRightFactorStream = 26;
constexpr std::uint64_t kLeftFactorStream = 27;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("unknown key \"" + item.key() + "\" in " + where);
  }
}

NetworkSpec parse_network(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("\"network\" must be an object");
  check_keys(j, "network", {"nodes", "streams", "horizon", "seed", "mode"});
  NetworkSpec spec;
  spec.nodes = j.at("nodes").get<int>();
  spec.streams = j.at("streams").get<int>();
  spec.horizon = j.at("horizon").get<int>();
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.mode = parse_connectivity_mode(j.value("mode", std::string("spectral")));
  return spec;
}

SolverOptions parse_solver(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("\"solver\" must be an object");
  check_keys(j, "solver",
             {"max_iterations", "relative_change_tolerance", "residual_target",
              "continuation_steps", "step_size_safety"});
  SolverOptions opts;
  opts.max_iterations = j.value("max_iterations", opts.max_iterations);
  opts.relative_change_tolerance =
      j.value("relative_change_tolerance", opts.relative_change_tolerance);
  opts.residual_target = j.value("residual_target", opts.residual_target);
  opts.continuation_steps = j.value("continuation_steps", opts.continuation_steps);
  opts.step_size_safety = j.value("step_size_safety", opts.step_size_safety);
  return opts;
}

TrialConfig parse_trial(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("trial config must be a JSON object");
  check_keys(j, "trial config",
             {"network", "kind", "sparse", "lowrank", "noise_norm", "solver", "master_seed"});
  TrialConfig cfg;
  cfg.network = parse_network(j.at("network"));
  cfg.kind = parse_structure_kind(j.at("kind").get<std::string>());
  if (j.contains("sparse")) {
    const json& s = j.at("sparse");
    check_keys(s, "sparse", {"basis", "sparsity"});
    cfg.sparse.basis = s.value("basis", cfg.sparse.basis);
    cfg.sparse.sparsity = s.value("sparsity", cfg.sparse.sparsity);
  } else if (cfg.kind == StructureKind::kSparse) {
    throw std::invalid_argument("kind \"sparse\" requires a \"sparse\" object");
  }
  if (j.contains("lowrank")) {
    const json& s = j.at("lowrank");
    check_keys(s, "lowrank", {"rank", "right_basis"});
    cfg.lowrank.rank = s.value("rank", cfg.lowrank.rank);
    cfg.lowrank.right_basis = s.value("right_basis", cfg.lowrank.right_basis);
  } else if (cfg.kind == StructureKind::kLowRank) {
    throw std::invalid_argument("kind \"lowrank\" requires a \"lowrank\" object");
  }
  cfg.noise_norm = j.value("noise_norm", 0.0);
  if (cfg.noise_norm < 0) throw std::invalid_argument("noise_norm must be >= 0");
  if (j.contains("solver")) cfg.solver = parse_solver(j.at("solver"));
  cfg.master_seed = j.value("master_seed", std::uint64_t{0});
  return cfg;
}

json network_json(const NetworkSpec& spec) {
  return json{{"nodes", spec.nodes},
              {"streams", spec.streams},
              {"horizon", spec.horizon},
              {"seed", spec.seed},
              {"mode", to_string(spec.mode)}};
}

json trial_json(const TrialConfig& cfg) {
  json j{{"network", network_json(cfg.network)},
         {"kind", to_string(cfg.kind)},
         {"noise_norm", cfg.noise_norm},
         {"master_seed", cfg.master_seed},
         {"solver",
          {{"max_iterations", cfg.solver.max_iterations},
           {"relative_change_tolerance", cfg.solver.relative_change_tolerance},
           {"residual_target", cfg.solver.residual_target},
           {"continuation_steps", cfg.solver.continuation_steps},
           {"step_size_safety", cfg.solver.step_size_safety}}}};
  if (cfg.kind == StructureKind::kSparse)
    j["sparse"] = {{"basis", cfg.sparse.basis}, {"sparsity", cfg.sparse.sparsity}};
  else
    j["lowrank"] = {{"rank", cfg.lowrank.rank}, {"right_basis", cfg.lowrank.right_basis}};
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Structure dimension of one grid cell applied to a copy of the base config.
TrialConfig cell_config(const GridConfig& grid, int row, int col) {
  TrialConfig cfg = grid.base;
  cfg.network.nodes = grid.axis_m[static_cast<std::size_t>(col)];
  int dim = grid.axis_dim[static_cast<std::size_t>(row)];
  if (cfg.kind == StructureKind::kSparse)
    cfg.sparse.sparsity = dim;
  else
    cfg.lowrank.rank = dim;
  cfg.master_seed = derive_seed(grid.base.master_seed,
                                {kCellStream, static_cast<std::uint64_t>(row),
                                 static_cast<std::uint64_t>(col)});
  return cfg;
}

void validate_grid(const GridConfig& grid) {
  if (grid.axis_m.empty() || grid.axis_dim.empty())
    throw std::invalid_argument("phase_diagram: axis_m and axis_dim must be non-empty");
  if (grid.trials_per_cell < 1)
    throw std::invalid_argument("phase_diagram: trials_per_cell must be >= 1");
  const NetworkSpec& net = grid.base.network;
  if (net.streams < 1 || net.horizon < 1)
    throw std::invalid_argument("phase_diagram: streams and horizon must be >= 1");
  for (int m : grid.axis_m)
    if (m < 2 || m % 2 != 0)
      throw std::invalid_argument("phase_diagram: axis_m values must be even and >= 2, got " +
                                  std::to_string(m));
  for (int dim : grid.axis_dim) {
    if (dim < 1)
      throw std::invalid_argument("phase_diagram: axis_dim values must be >= 1");
    if (grid.base.kind == StructureKind::kSparse &&
        dim > net.streams * net.horizon)
      throw std::invalid_argument("phase_diagram: sparsity exceeds streams * horizon");
    if (grid.base.kind == StructureKind::kLowRank &&
        dim > std::min(net.streams, net.horizon))
      throw std::invalid_argument("phase_diagram: rank exceeds min(streams, horizon)");
  }
  // Fail fast on basis problems (unknown kind, haar without a power-of-two
  // horizon) instead of mid-sweep.
  if (grid.base.kind == StructureKind::kSparse)
    make_basis(grid.base.sparse.basis, net.horizon);
  else if (grid.base.lowrank.right_basis != "gaussian")
    make_basis(grid.base.lowrank.right_basis, net.horizon);
}

std::vector<int> order_by_value(const std::vector<int>& values) {
  std::vector<int> idx(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)]; });
  return idx;
}

}  // namespace

StructureKind parse_structure_kind(const std::string& text) {
  if (text == "sparse") return StructureKind::kSparse;
  if (text == "lowrank") return StructureKind::kLowRank;
  throw std::invalid_argument("kind must be \"sparse\" or \"lowrank\", got \"" + text + "\"");
}

std::string to_string(StructureKind kind) {
  return kind == StructureKind::kSparse ? "sparse" : "lowrank";
}

SparseInput gen_sparse_input(const JointBasis& basis, int sparsity, std::uint64_t seed) {
  const int total = basis.base.size * basis.streams;
  if (sparsity < 0 || sparsity > total)
    throw std::invalid_argument("gen_sparse_input: sparsity must be in [0, streams * size]");
  Rng rng(seed);
  SparseInput input;
  input.support = rng.sample_without_replacement(total, sparsity);
  input.coefficients = Eigen::VectorXd::Zero(total);
  for (int idx : input.support) input.coefficients(idx) = rng.gaussian();
  input.signal = joint_apply(basis, input.coefficients);
  return input;
}

LowRankInput gen_lowrank_input(int streams, int horizon, int rank, const std::string& kind,
                               std::uint64_t seed) {
  if (streams < 1 || horizon < 1)
    throw std::invalid_argument("gen_lowrank_input: streams and horizon must be >= 1");
  if (rank < 1 || rank > std::min(streams, horizon))
    throw std::invalid_argument("gen_lowrank_input: rank must be in [1, min(streams, horizon)]");

  LowRankInput input;
  Rng right_rng(derive_seed(seed, {kRightFactorStream}));
  if (kind == "gaussian") {
    Eigen::MatrixXd g(horizon, rank);
    for (int j = 0; j < rank; ++j)
      for (int i = 0; i < horizon; ++i) g(i, j) = right_rng.gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    input.right = qr.householderQ() * Eigen::MatrixXd::Identity(horizon, rank);
    Eigen::VectorXd rdiag = qr.matrixQR().diagonal();
    for (int j = 0; j < rank; ++j)
      if (rdiag(j) < 0) input.right.col(j) = -input.right.col(j);
  } else {
    OrthonormalBasis basis = make_basis(kind, horizon);  // rejects unknown kinds
    std::vector<int> cols = right_rng.sample_without_replacement(horizon, rank);
    input.right.resize(horizon, rank);
    for (int j = 0; j < rank; ++j) input.right.col(j) = basis.matrix.col(cols[static_cast<std::size_t>(j)]);
  }

  Rng left_rng(derive_seed(seed, {kLeftFactorStream}));
  input.left.resize(streams, rank);
  for (int j = 0; j < rank; ++j)
    for (int i = 0; i < streams; ++i) input.left(i, j) = left_rng.gaussian();
  input.history = input.left * input.right.transpose();
  return input;
}

Eigen::VectorXd scaled_noise(int dim, double target_norm, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("scaled_noise: dim must be >= 1");
  if (target_norm < 0) throw std::invalid_argument("scaled_noise: target_norm must be >= 0");
  if (target_norm == 0) return Eigen::VectorXd::Zero(dim);
  Rng rng(seed);
  Eigen::VectorXd direction(dim);
  for (int i = 0; i < dim; ++i) direction(i) = rng.gaussian();
  double norm = direction.norm();
  if (norm == 0) direction(0) = 1.0, norm = 1.0;
  return direction * (target_norm / norm);
}

double rmse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("rmse: estimate and truth must have equal size");
  double denom = truth.squaredNorm();
  if (denom == 0) throw std::invalid_argument("rmse: truth must be nonzero");
  return (estimate - truth).squaredNorm() / denom;
}

double rmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw std::invalid_argument("rmse: estimate and truth must have equal shape");
  double denom = truth.squaredNorm();
  if (denom == 0) throw std::invalid_argument("rmse: truth must be nonzero");
  return (estimate - truth).squaredNorm() / denom;
}

Eigen::MatrixXd history_operator_matrix(const MeasurementOperator& op) {
  Eigen::MatrixXd out(op.matrix.rows(), op.matrix.cols());
  for (int k = 0; k < op.horizon; ++k)
    for (int l = 0; l < op.streams; ++l)
      out.col(static_cast<Eigen::Index>(k) * op.streams + l) =
          op.matrix.col(column_index(l, op.horizon - 1 - k, op.horizon));
  return out;
}

TrialResult run_trial(const TrialConfig& config, int trial_index) {
  if (trial_index < 0) throw std::invalid_argument("run_trial: trial_index must be >= 0");
  const std::uint64_t trial_seed =
      derive_seed(config.master_seed, {kTrialStream, static_cast<std::uint64_t>(trial_index)});

  NetworkSpec spec = config.network;
  spec.seed = derive_seed(trial_seed, {kNetworkStream});
  EsnNetwork net = build_network(spec);
  MeasurementOperator op = build_operator(net);

  Eigen::VectorXd noise =
      scaled_noise(spec.nodes, config.noise_norm, derive_seed(trial_seed, {kNoiseStream}));
  SolverOptions solver = config.solver;
  solver.residual_target = config.noise_norm;

  TrialResult out;
  out.trial_seed = trial_seed;

  if (config.kind == StructureKind::kSparse) {
    JointBasis jb = joint_basis(make_basis(config.sparse.basis, spec.horizon), spec.streams);
    SparseInput input =
        gen_sparse_input(jb, config.sparse.sparsity, derive_seed(trial_seed, {kInputStream}));
    Eigen::VectorXd x = op.matrix * input.signal + noise;
    Eigen::MatrixXd a_eff = right_multiply_joint(op.matrix, jb);
    RecoveryResult rec = solve_l1(a_eff, x, solver);
    Eigen::VectorXd recovered = joint_apply(jb, rec.estimate);
    out.rmse = rmse(recovered, input.signal);
    out.truth_norm = input.signal.norm();
    out.residual_norm = rec.residual_norm;
    out.converged = rec.converged;
    out.iterations_used = rec.iterations_used;
  } else {
    LowRankInput input = gen_lowrank_input(spec.streams, spec.horizon, config.lowrank.rank,
                                           config.lowrank.right_basis,
                                           derive_seed(trial_seed, {kInputStream}));
    Eigen::MatrixXd b = history_operator_matrix(op);
    Eigen::VectorXd x =
        b * Eigen::Map<const Eigen::VectorXd>(input.history.data(), input.history.size()) + noise;
    auto forward = [&b](const Eigen::MatrixXd& s) {
      return Eigen::VectorXd(b * Eigen::Map<const Eigen::VectorXd>(s.data(), s.size()));
    };
    auto adjoint_map = [&b, &spec](const Eigen::VectorXd& u) {
      Eigen::VectorXd v = b.transpose() * u;
      return Eigen::MatrixXd(
          Eigen::Map<const Eigen::MatrixXd>(v.data(), spec.streams, spec.horizon));
    };
    MatrixRecoveryResult rec =
        solve_nuclear(forward, adjoint_map, x, spec.streams, spec.horizon, solver);
    out.rmse = rmse(rec.estimate, input.history);
    out.truth_norm = input.history.norm();
    out.residual_norm = rec.residual_norm;
    out.converged = rec.converged;
    out.iterations_used = rec.iterations_used;
  }
  return out;
}

PhaseGrid phase_diagram(const GridConfig& config, int workers) {
  validate_grid(config);
  const int n_rows = static_cast<int>(config.axis_dim.size());
  const int n_cols = static_cast<int>(config.axis_m.size());
  const int trials = config.trials_per_cell;
  const std::size_t total = static_cast<std::size_t>(n_rows) * n_cols * trials;

  std::vector<TrialResult> results(total);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    for (;;) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= total || failed.load()) break;
      const int trial = static_cast<int>(idx % static_cast<std::size_t>(trials));
      const std::size_t cell = idx / static_cast<std::size_t>(trials);
      const int row = static_cast<int>(cell) / n_cols;
      const int col = static_cast<int>(cell) % n_cols;
      try {
        results[idx] = run_trial(cell_config(config, row, col), trial);
      } catch (...) {
        std::lock_guard<std::mutex> guard(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        break;
      }
    }
  };

  int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(total)));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  PhaseGrid grid;
  grid.config = config;
  grid.cells.resize(static_cast<std::size_t>(n_rows) * n_cols);
  const double nl = static_cast<double>(config.base.network.streams) * config.base.network.horizon;
  for (int row = 0; row < n_rows; ++row) {
    for (int col = 0; col < n_cols; ++col) {
      PhaseCell& cell = grid.cells[static_cast<std::size_t>(row) * n_cols + col];
      cell.dim_value = config.axis_dim[static_cast<std::size_t>(row)];
      cell.nodes = config.axis_m[static_cast<std::size_t>(col)];
      cell.rho = static_cast<double>(cell.dim_value) / cell.nodes;
      cell.gamma = cell.nodes / nl;
      cell.trials = trials;
      // Fixed-order aggregation (trial 0, 1, ...) keeps the output identical
      // for every worker count.
      double sum = 0.0;
      for (int t = 0; t < trials; ++t) {
        const TrialResult& r =
            results[(static_cast<std::size_t>(row) * n_cols + col) * trials + t];
        sum += r.rmse;
        if (r.converged) ++cell.n_converged;
      }
      cell.mean_rmse = sum / trials;
      double sq = 0.0;
      for (int t = 0; t < trials; ++t) {
        const TrialResult& r =
            results[(static_cast<std::size_t>(row) * n_cols + col) * trials + t];
        sq += (r.rmse - cell.mean_rmse) * (r.rmse - cell.mean_rmse);
      }
      cell.std_rmse = trials > 1 ? std::sqrt(sq / (trials - 1)) : 0.0;
    }
  }
  return grid;
}

std::string grid_csv_text(const PhaseGrid& grid) {
  std::string out = "dim,M,rho,gamma,trials,mean_rmse,std_rmse,n_converged\n";
  char line[320];
  for (const PhaseCell& cell : grid.cells) {
    std::snprintf(line, sizeof line, "%d,%d,%.17g,%.17g,%d,%.17g,%.17g,%d\n", cell.dim_value,
                  cell.nodes, cell.rho, cell.gamma, cell.trials, cell.mean_rmse, cell.std_rmse,
                  cell.n_converged);
    out += line;
  }
  return out;
}

void write_grid_csv(const PhaseGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out << grid_csv_text(grid);
}

void write_grid_pgm(const PhaseGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  const int n_cols = static_cast<int>(grid.config.axis_m.size());
  std::vector<int> row_order = order_by_value(grid.config.axis_dim);
  std::vector<int> col_order = order_by_value(grid.config.axis_m);
  out << "P5\n" << n_cols << " " << row_order.size() << "\n255\n";
  for (int row : row_order) {
    for (int col : col_order) {
      const PhaseCell& cell = grid.cells[static_cast<std::size_t>(row) * n_cols + col];
      double clipped = std::min(cell.mean_rmse, 1.0);
      unsigned char pixel = static_cast<unsigned char>(std::lround(255.0 * clipped));
      out.write(reinterpret_cast<const char*>(&pixel), 1);
    }
  }
}

TrialConfig parse_trial_config(const std::string& json_text) {
  try {
    return parse_trial(json::parse(json_text));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
}

GridConfig parse_grid_config(const std::string& json_text) {
  try {
    json j = json::parse(json_text);
    if (!j.is_object()) throw std::invalid_argument("grid config must be a JSON object");
    check_keys(j, "grid config", {"axis_m", "axis_dim", "trials_per_cell", "base"});
    GridConfig grid;
    grid.axis_m = j.at("axis_m").get<std::vector<int>>();
    grid.axis_dim = j.at("axis_dim").get<std::vector<int>>();
    grid.trials_per_cell = j.value("trials_per_cell", grid.trials_per_cell);
    grid.base = parse_trial(j.at("base"));
    return grid;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
}

TrialConfig load_trial_config(const std::string& path) {
  return parse_trial_config(read_file(path));
}

GridConfig load_grid_config(const std::string& path) {
  return parse_grid_config(read_file(path));
}

std::string trial_config_json(const TrialConfig& config) { return trial_json(config).dump(2); }

std::string grid_config_json(const GridConfig& config) {
  json j{{"axis_m", config.axis_m},
         {"axis_dim", config.axis_dim},
         {"trials_per_cell", config.trials_per_cell},
         {"base", trial_json(config.base)}};
  return j.dump(2);
}

}  // namespace seqmem
