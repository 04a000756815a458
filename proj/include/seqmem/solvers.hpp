#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace seqmem {

/// Knobs shared by the l1 and nuclear-norm solvers.  Both minimize the
/// regularized least-squares surrogate lambda * reg(a) + 0.5 * ||x - A a||^2
/// with an accelerated proximal gradient loop, sweeping lambda geometrically
/// downward (continuation) and then bisecting lambda so the final residual
/// lands in [0.9, 1.01] * residual_target.
struct SolverOptions {
  int max_iterations = 2000;  ///< inner iteration cap per lambda stage
  double relative_change_tolerance = 1e-8;
  double residual_target = 0.0;  ///< epsilon: noise-ball radius; 0 = noiseless
  int continuation_steps = 10;
  double step_size_safety = 0.95;  ///< step = safety / ||A||^2
  bool record_objective = false;   ///< fill objective_trace / stage_starts
};

/// Outcome of a vector-valued recovery.  `objective_value` is the program
/// objective ||estimate||_1 (the Lagrangian values per inner iteration are in
/// `objective_trace` when recorded; `stage_starts` marks where each
/// fixed-lambda stage begins in the trace).  `converged` guarantees
/// residual_norm <= 1.01 * residual_target (or, in the noiseless case,
/// residual_norm <= relative_change_tolerance * ||x||).
struct RecoveryResult {
  Eigen::VectorXd estimate;
  double residual_norm = 0.0;
  int iterations_used = 0;
  bool converged = false;
  double objective_value = 0.0;
  std::vector<double> objective_trace;
  std::vector<int> stage_starts;
};

/// Matrix-valued analogue; objective_value is the nuclear norm.
struct MatrixRecoveryResult {
  Eigen::MatrixXd estimate;
  double residual_norm = 0.0;
  int iterations_used = 0;
  bool converged = false;
  double objective_value = 0.0;
  std::vector<double> objective_trace;
  std::vector<int> stage_starts;
};

/// Exact minimizer over a fixed support size, found by enumeration.
struct SparseOracleResult {
  Eigen::VectorXd estimate;
  std::vector<int> support;  ///< sorted; ties broken to the lexicographically smallest support
  double residual_norm = 0.0;
  long long supports_examined = 0;
};

using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using MatrixForwardMap = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
using MatrixAdjointMap = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Elementwise shrinkage: sign(v) * max(|v| - tau, 0).
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double tau);

/// Shrink the singular values: U * max(S - tau, 0) * V^T.
Eigen::MatrixXd singular_value_threshold(const Eigen::MatrixXd& x, double tau);

double nuclear_norm(const Eigen::MatrixXd& x);

/// Largest singular value of the linear map, by power iteration on A^T A:
/// deterministic all-ones start, at most 200 iterations, stopping when the
/// estimate changes by less than 1e-10 relatively.  A zero map returns 0.
double operator_norm(const VectorMap& forward, const VectorMap& adjoint_map, int input_dim);
double operator_norm(const Eigen::MatrixXd& a);

/// Basis-pursuit-denoising style solve: minimize ||a||_1 subject to
/// ||x - a_eff * a||_2 <= residual_target, via the continuation scheme above.
/// With residual_target = 0 the final stage runs at lambda = 1e-10 * lambda_0
/// and convergence means the residual fell below
/// relative_change_tolerance * ||x||.
RecoveryResult solve_l1(const Eigen::MatrixXd& a_eff, const Eigen::VectorXd& x,
                        const SolverOptions& opts);

/// Nuclear-norm analogue for a linear map on rows x cols matrices given by a
/// forward/adjoint pair.
MatrixRecoveryResult solve_nuclear(const MatrixForwardMap& forward,
                                   const MatrixAdjointMap& adjoint_map, const Eigen::VectorXd& x,
                                   int rows, int cols, const SolverOptions& opts);

/// Exhaustive least-squares search over all supports of the given size.
/// Supports are enumerated in lexicographic order and only a strictly smaller
/// residual replaces the incumbent, so ties keep the lexicographically
/// smallest support.  Throws if C(cols, sparsity) exceeds 1e6.
SparseOracleResult brute_force_sparse(const Eigen::MatrixXd& a_eff, const Eigen::VectorXd& x,
                                      int sparsity);

}  // namespace seqmem
