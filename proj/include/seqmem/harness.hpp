#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "seqmem/bases.hpp"
#include "seqmem/network.hpp"
#include "seqmem/solvers.hpp"

namespace seqmem {

enum class StructureKind { kSparse, kLowRank };

StructureKind parse_structure_kind(const std::string& text);
std::string to_string(StructureKind kind);

/// Sparse trials: the stacked input history is sparsity-many coefficients in
/// the per-stream basis of the given kind.
struct SparseStructure {
  std::string basis = "canonical";
  int sparsity = 1;
};

/// Low-rank trials: the input history matrix S (L x N) is rank-many Gaussian
/// left factors times structured right singular vectors.  right_basis is one
/// of gaussian | canonical | haar | dct.
struct LowRankStructure {
  int rank = 1;
  std::string right_basis = "gaussian";
};

/// Everything one recovery trial needs.  The network seed inside `network` is
/// ignored by run_trial: each trial derives its own seeds from (master_seed,
/// trial_index) so trials are independent and order-insensitive.
struct TrialConfig {
  NetworkSpec network;
  StructureKind kind = StructureKind::kSparse;
  SparseStructure sparse;
  LowRankStructure lowrank;
  double noise_norm = 0.0;
  SolverOptions solver;
  std::uint64_t master_seed = 0;
};

struct TrialResult {
  double rmse = 0.0;
  double truth_norm = 0.0;  ///< norm of the ground truth, so absolute errors can be reconstructed
  double residual_norm = 0.0;
  bool converged = false;
  int iterations_used = 0;
  std::uint64_t trial_seed = 0;
};

/// Phase-diagram sweep: axis_m values replace network.nodes, axis_dim values
/// replace the structure dimension (sparsity for sparse, rank for low-rank).
struct GridConfig {
  std::vector<int> axis_m;
  std::vector<int> axis_dim;
  int trials_per_cell = 20;
  TrialConfig base;
};

struct PhaseCell {
  int dim_value = 0;
  int nodes = 0;
  double rho = 0.0;    ///< dim / M
  double gamma = 0.0;  ///< M / (N * L)
  int trials = 0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  int n_converged = 0;  ///< 0 flags a cell where no trial converged
};

/// Cells in row-major order: cell(i, j) = cells[i * axis_m.size() + j] pairs
/// axis_dim[i] with axis_m[j].
struct PhaseGrid {
  GridConfig config;
  std::vector<PhaseCell> cells;
};

struct SparseInput {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd signal;  ///< stacked history, = Psi * coefficients
  std::vector<int> support;
};

struct LowRankInput {
  Eigen::MatrixXd history;  ///< S = left * right^T, L x N
  Eigen::MatrixXd left;     ///< L x R, i.i.d. standard Gaussian
  Eigen::MatrixXd right;    ///< N x R, orthonormal columns
};

/// Draw a sparsity-sized support uniformly without replacement, fill it with
/// standard Gaussian coefficients, and synthesize the stacked signal.
SparseInput gen_sparse_input(const JointBasis& basis, int sparsity, std::uint64_t seed);

/// Draw S = left * right^T.  kind "gaussian" orthonormalizes an N x R Gaussian
/// draw for the right factor; the basis kinds pick `rank` distinct columns of
/// that basis uniformly without replacement.
LowRankInput gen_lowrank_input(int streams, int horizon, int rank, const std::string& kind,
                               std::uint64_t seed);

/// Gaussian direction rescaled to exactly `target_norm` (zero target gives the
/// zero vector).
Eigen::VectorXd scaled_noise(int dim, double target_norm, std::uint64_t seed);

/// Relative squared error ||estimate - truth||^2 / ||truth||^2.  A zero truth
/// is rejected.
double rmse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);
double rmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

/// Rebuild the measurement matrix so it acts on vec(S) (column-major L x N)
/// instead of the stacked history: column l + k * L of the result is column
/// l * N + (N - 1 - k) of op.matrix.
Eigen::MatrixXd history_operator_matrix(const MeasurementOperator& op);

/// Run one end-to-end trial: derive seeds, build the network, synthesize the
/// structured input and noise, measure, recover, score.  Non-convergence is
/// recorded in the result, never thrown.
TrialResult run_trial(const TrialConfig& config, int trial_index);

/// Sweep the grid with `workers` threads (<= 0 picks the hardware count).
/// Every (row, col, trial) derives its seed independently, and aggregation
/// runs in a fixed order, so the result is identical for any worker count.
PhaseGrid phase_diagram(const GridConfig& config, int workers = 0);

/// CSV columns: dim,M,rho,gamma,trials,mean_rmse,std_rmse,n_converged; floats
/// carry 17 significant digits.
void write_grid_csv(const PhaseGrid& grid, const std::string& path);
std::string grid_csv_text(const PhaseGrid& grid);

/// 8-bit binary PGM, one pixel per cell: round(255 * min(mean_rmse, 1)).
/// Row 0 is the smallest dim value; column 0 the smallest M.
void write_grid_pgm(const PhaseGrid& grid, const std::string& path);

TrialConfig load_trial_config(const std::string& path);
GridConfig load_grid_config(const std::string& path);
TrialConfig parse_trial_config(const std::string& json_text);
GridConfig parse_grid_config(const std::string& json_text);
std::string trial_config_json(const TrialConfig& config);
std::string grid_config_json(const GridConfig& config);

}  // namespace seqmem
