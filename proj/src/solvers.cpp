#include "seqmem/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqmem {
namespace {

void check_options(const SolverOptions& opts) {
  if (opts.max_iterations < 1)
    throw std::invalid_argument("max_iterations must be >= 1");
  if (opts.relative_change_tolerance <= 0)
    throw std::invalid_argument("relative_change_tolerance must be positive");
  if (opts.residual_target < 0)
    throw std::invalid_argument("residual_target must be >= 0");
  if (opts.continuation_steps < 1)
    throw std::invalid_argument("continuation_steps must be >= 1");
  if (opts.step_size_safety <= 0 || opts.step_size_safety > 1)
    throw std::invalid_argument("step_size_safety must be in (0, 1]");
}

template <class Var>
struct StageOutput {
  Var estimate;
  double residual_norm = 0.0;
  int iterations = 0;
};

// One fixed-lambda stage of monotone accelerated proximal gradient (the
// monotone FISTA variant: the candidate point is only accepted if it does not
// increase the objective, so the recorded objective sequence is non-increasing
// by construction).  Stops once an accepted step moves the iterate by less
// than rel_tol relative to its size.  A nonnegative `residual_goal` adds an
// early exit as soon as the data residual reaches it; with `goal_required` the
// relative-change stop is deferred (down to a much tighter stall level) until
// the goal is met, so the stage cannot settle short of a reachable target.
template <class Var, class Forward, class Adjoint, class Prox, class RegNorm>
StageOutput<Var> run_stage(Var current, const Eigen::VectorXd& x, double lambda, double step,
                           const SolverOptions& opts, double residual_goal, bool goal_required,
                           Forward&& forward, Adjoint&& adjoint_map, Prox&& prox,
                           RegNorm&& reg_norm, std::vector<double>* trace,
                           std::vector<int>* stage_starts) {
  if (stage_starts) stage_starts->push_back(trace ? static_cast<int>(trace->size()) : 0);

  Var iterate = current;
  Var momentum_point = current;
  double t = 1.0;
  Eigen::VectorXd residual = x - forward(iterate);
  double residual_norm = residual.norm();
  double objective = lambda * reg_norm(iterate) + 0.5 * residual.squaredNorm();

  StageOutput<Var> out;
  out.iterations = 0;
  if (residual_goal >= 0 && residual_norm <= residual_goal) {
    out.estimate = iterate;
    out.residual_norm = residual_norm;
    return out;
  }
  for (int k = 0; k < opts.max_iterations; ++k) {
    Eigen::VectorXd residual_y = forward(momentum_point) - x;
    Var gradient = adjoint_map(residual_y);
    Var candidate = prox(momentum_point - step * gradient, step * lambda);
    Eigen::VectorXd residual_c = x - forward(candidate);
    double objective_c = lambda * reg_norm(candidate) + 0.5 * residual_c.squaredNorm();

    bool accepted = objective_c <= objective;
    Var next = accepted ? candidate : iterate;
    double objective_next = accepted ? objective_c : objective;

    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    momentum_point = next + (t / t_next) * (candidate - next) + ((t - 1.0) / t_next) * (next - iterate);

    double change = (next - iterate).norm();
    iterate = next;
    objective = objective_next;
    if (accepted) residual_norm = residual_c.norm();
    t = t_next;
    ++out.iterations;
    if (trace) trace->push_back(objective);

    if (residual_goal >= 0 && residual_norm <= residual_goal) break;
    if (accepted && change <= opts.relative_change_tolerance * std::max(1.0, iterate.norm())) {
      if (!goal_required) break;
      // short of the goal: only give up once the iterate has truly stalled
      if (change <= 1e-4 * opts.relative_change_tolerance * std::max(1.0, iterate.norm())) break;
    }
  }
  out.estimate = iterate;
  out.residual_norm = (x - forward(iterate)).norm();
  return out;
}

// Continuation driver shared by the vector and matrix solvers.  `lambda_zero`
// must be the regularizer dual norm of A^T x (the smallest lambda whose
// minimizer is exactly zero).
template <class Var, class Result, class Forward, class Adjoint, class Prox, class RegNorm>
Result run_continuation(const Var& zero_var, const Eigen::VectorXd& x, double lambda_zero,
                        double step, const SolverOptions& opts, Forward&& forward,
                        Adjoint&& adjoint_map, Prox&& prox, RegNorm&& reg_norm) {
  Result result;
  std::vector<double>* trace = opts.record_objective ? &result.objective_trace : nullptr;
  std::vector<int>* starts = opts.record_objective ? &result.stage_starts : nullptr;

  const double epsilon = opts.residual_target;
  const double x_norm = x.norm();

  auto finish = [&](const Var& estimate, double residual_norm, int iterations) {
    result.estimate = estimate;
    result.residual_norm = residual_norm;
    result.iterations_used = iterations;
    result.objective_value = reg_norm(estimate);
    result.converged = epsilon > 0 ? residual_norm <= 1.01 * epsilon
                                   : residual_norm <= opts.relative_change_tolerance * x_norm;
    return result;
  };

  // Degenerate instances: zero data (or data already inside the noise ball)
  // are solved exactly by the zero vector.
  if (x_norm <= 1.01 * epsilon || lambda_zero == 0.0)
    return finish(zero_var, x_norm, 0);

  const double floor_ratio = 1e-10;  // final continuation stage at 1e-10 * lambda_0
  const double ratio = std::pow(floor_ratio, 1.0 / opts.continuation_steps);

  Var estimate = zero_var;
  int iterations = 0;
  double lambda = lambda_zero;
  double lambda_high = lambda_zero;  // most recent lambda whose residual exceeded the target band
  double residual_norm = x_norm;

  for (int stage = 1; stage <= opts.continuation_steps; ++stage) {
    lambda = lambda_zero * std::pow(ratio, stage);
    const bool last = stage == opts.continuation_steps;
    // Noisy solves exit a stage as soon as the residual enters the target
    // band; the final noiseless stage instead refuses to settle above its
    // convergence threshold while progress is still being made.
    const double goal = epsilon > 0 ? 1.01 * epsilon
                                    : (last ? opts.relative_change_tolerance * x_norm : -1.0);
    StageOutput<Var> stage_out = run_stage(estimate, x, lambda, step, opts, goal,
                                           epsilon == 0.0 && last, forward, adjoint_map, prox,
                                           reg_norm, trace, starts);
    estimate = stage_out.estimate;
    residual_norm = stage_out.residual_norm;
    iterations += stage_out.iterations;
    if (epsilon > 0 && residual_norm <= 1.01 * epsilon) break;
    lambda_high = lambda;
  }

  if (epsilon == 0.0) return finish(estimate, residual_norm, iterations);

  // Feasible iterate seen so far (residual within 1.01 * epsilon), kept as a
  // fallback if the bisection below never lands inside the band.
  bool have_feasible = residual_norm <= 1.01 * epsilon;
  Var feasible = estimate;
  double feasible_residual = residual_norm;

  int bisection_steps = 30;
  // Phase 1: if even the smallest continuation lambda leaves the residual
  // above the band, keep shrinking lambda (counts against the bisection
  // budget) until it becomes feasible or lambda underflows.
  while (bisection_steps > 0 && residual_norm > 1.01 * epsilon &&
         lambda > 1e3 * std::numeric_limits<double>::min()) {
    lambda_high = lambda;
    lambda *= 0.1;
    StageOutput<Var> stage_out = run_stage(estimate, x, lambda, step, opts, 1.01 * epsilon, false,
                                           forward, adjoint_map, prox, reg_norm, trace, starts);
    estimate = stage_out.estimate;
    residual_norm = stage_out.residual_norm;
    iterations += stage_out.iterations;
    --bisection_steps;
  }
  if (residual_norm <= 1.01 * epsilon && !have_feasible) {
    have_feasible = true;
    feasible = estimate;
    feasible_residual = residual_norm;
  }

  // Phase 2: bisect (in log-lambda, since the sweep is geometric) between the
  // infeasible lambda_high and the feasible lambda until the residual lands in
  // [0.9, 1.01] * epsilon.
  double lambda_low = lambda;
  while (bisection_steps > 0 && !(residual_norm >= 0.9 * epsilon && residual_norm <= 1.01 * epsilon)) {
    double lambda_mid = std::sqrt(lambda_low * lambda_high);
    if (!(lambda_mid > 0) || lambda_mid == lambda_low || lambda_mid == lambda_high) break;
    // Coming from above the band, stop as soon as it is entered; coming from
    // below (overshoot), settle at lambda_mid so the residual can rise.
    const double band_goal = residual_norm > 1.01 * epsilon ? 1.01 * epsilon : -1.0;
    StageOutput<Var> stage_out = run_stage(estimate, x, lambda_mid, step, opts, band_goal, false,
                                           forward, adjoint_map, prox, reg_norm, trace, starts);
    estimate = stage_out.estimate;
    residual_norm = stage_out.residual_norm;
    iterations += stage_out.iterations;
    --bisection_steps;
    if (residual_norm > 1.01 * epsilon) {
      lambda_high = lambda_mid;
    } else {
      lambda_low = lambda_mid;
      feasible = estimate;
      feasible_residual = residual_norm;
      have_feasible = true;
    }
  }

  if (residual_norm > 1.01 * epsilon && have_feasible)
    return finish(feasible, feasible_residual, iterations);
  return finish(estimate, residual_norm, iterations);
}

long long binomial_guarded(int n, int k, double limit) {
  double value = 1.0;
  for (int i = 1; i <= k; ++i) {
    value *= static_cast<double>(n - k + i) / static_cast<double>(i);
    if (value > limit) return -1;
  }
  return static_cast<long long>(std::llround(value));
}

}  // namespace

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double tau) {
  if (tau < 0) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double mag = std::abs(v(i)) - tau;
    out(i) = mag > 0 ? (v(i) > 0 ? mag : -mag) : 0.0;
  }
  return out;
}

Eigen::MatrixXd singular_value_threshold(const Eigen::MatrixXd& x, double tau) {
  if (tau < 0) throw std::invalid_argument("singular_value_threshold: tau must be >= 0");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sigma = svd.singularValues();
  for (Eigen::Index i = 0; i < sigma.size(); ++i) sigma(i) = std::max(sigma(i) - tau, 0.0);
  return svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
}

double nuclear_norm(const Eigen::MatrixXd& x) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  return svd.singularValues().sum();
}

double operator_norm(const VectorMap& forward, const VectorMap& adjoint_map, int input_dim) {
  if (input_dim < 1) throw std::invalid_argument("operator_norm: input_dim must be >= 1");
  Eigen::VectorXd v = Eigen::VectorXd::Ones(input_dim) / std::sqrt(static_cast<double>(input_dim));
  double sigma = 0.0;
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd w = adjoint_map(forward(v));
    double nu = w.norm();
    if (nu == 0.0) return 0.0;
    double sigma_next = std::sqrt(nu);
    v = w / nu;
    bool settled = std::abs(sigma_next - sigma) <= 1e-10 * std::max(sigma_next, 1e-300);
    sigma = sigma_next;
    if (settled) break;
  }
  return sigma;
}

double operator_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return operator_norm([&a](const Eigen::VectorXd& v) { return Eigen::VectorXd(a * v); },
                       [&a](const Eigen::VectorXd& u) { return Eigen::VectorXd(a.transpose() * u); },
                       static_cast<int>(a.cols()));
}

RecoveryResult solve_l1(const Eigen::MatrixXd& a_eff, const Eigen::VectorXd& x,
                        const SolverOptions& opts) {
  check_options(opts);
  if (a_eff.rows() != x.size())
    throw std::invalid_argument("solve_l1: matrix rows must match observation length");
  if (!a_eff.allFinite() || !x.allFinite())
    throw std::runtime_error("solve_l1: non-finite entries in the instance");

  double op_norm = operator_norm(a_eff);
  double lambda_zero = a_eff.cols() > 0 ? (a_eff.transpose() * x).cwiseAbs().maxCoeff() : 0.0;
  if (!std::isfinite(op_norm) || !std::isfinite(lambda_zero))
    throw std::runtime_error("solve_l1: instance scale overflows");
  double step = op_norm > 0 ? opts.step_size_safety / (op_norm * op_norm) : 0.0;

  Eigen::VectorXd zero_var = Eigen::VectorXd::Zero(a_eff.cols());
  auto forward = [&a_eff](const Eigen::VectorXd& v) { return Eigen::VectorXd(a_eff * v); };
  auto adjoint_map = [&a_eff](const Eigen::VectorXd& r) {
    return Eigen::VectorXd(a_eff.transpose() * r);
  };
  auto prox = [](const Eigen::VectorXd& v, double tau) { return soft_threshold(v, tau); };
  auto reg = [](const Eigen::VectorXd& v) { return v.lpNorm<1>(); };
  return run_continuation<Eigen::VectorXd, RecoveryResult>(zero_var, x, lambda_zero, step, opts,
                                                           forward, adjoint_map, prox, reg);
}

MatrixRecoveryResult solve_nuclear(const MatrixForwardMap& forward,
                                   const MatrixAdjointMap& adjoint_map, const Eigen::VectorXd& x,
                                   int rows, int cols, const SolverOptions& opts) {
  check_options(opts);
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("solve_nuclear: rows and cols must be >= 1");
  if (!x.allFinite()) throw std::runtime_error("solve_nuclear: non-finite observation");

  Eigen::MatrixXd zero_var = Eigen::MatrixXd::Zero(rows, cols);
  if (forward(zero_var).size() != x.size())
    throw std::invalid_argument("solve_nuclear: forward output length must match observation");

  auto flat_forward = [&](const Eigen::VectorXd& v) {
    return forward(Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols));
  };
  auto flat_adjoint = [&](const Eigen::VectorXd& u) {
    Eigen::MatrixXd m = adjoint_map(u);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
  };
  double op_norm = operator_norm(flat_forward, flat_adjoint, rows * cols);
  double step = op_norm > 0 ? opts.step_size_safety / (op_norm * op_norm) : 0.0;
  double lambda_zero = operator_norm(adjoint_map(x));  // spectral norm: dual of the nuclear norm
  if (!std::isfinite(op_norm) || !std::isfinite(lambda_zero))
    throw std::runtime_error("solve_nuclear: instance scale overflows");

  auto prox = [](const Eigen::MatrixXd& m, double tau) { return singular_value_threshold(m, tau); };
  auto reg = [](const Eigen::MatrixXd& m) { return nuclear_norm(m); };
  return run_continuation<Eigen::MatrixXd, MatrixRecoveryResult>(zero_var, x, lambda_zero, step,
                                                                 opts, forward, adjoint_map, prox,
                                                                 reg);
}

SparseOracleResult brute_force_sparse(const Eigen::MatrixXd& a_eff, const Eigen::VectorXd& x,
                                      int sparsity) {
  const int cols = static_cast<int>(a_eff.cols());
  if (a_eff.rows() != x.size())
    throw std::invalid_argument("brute_force_sparse: matrix rows must match observation length");
  if (sparsity < 0 || sparsity > cols)
    throw std::invalid_argument("brute_force_sparse: sparsity must be in [0, cols]");
  long long count = binomial_guarded(cols, sparsity, 1e6);
  if (count < 0)
    throw std::invalid_argument("brute_force_sparse: C(" + std::to_string(cols) + ", " +
                                std::to_string(sparsity) + ") exceeds the 1e6 enumeration bound");

  SparseOracleResult best;
  best.estimate = Eigen::VectorXd::Zero(cols);
  best.residual_norm = x.norm();
  best.supports_examined = 0;
  if (sparsity == 0) return best;

  std::vector<int> support(static_cast<std::size_t>(sparsity));
  for (int i = 0; i < sparsity; ++i) support[static_cast<std::size_t>(i)] = i;
  best.residual_norm = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd sub(a_eff.rows(), sparsity);
  for (;;) {
    for (int i = 0; i < sparsity; ++i) sub.col(i) = a_eff.col(support[static_cast<std::size_t>(i)]);
    Eigen::VectorXd coeffs = sub.colPivHouseholderQr().solve(x);
    double residual = (x - sub * coeffs).norm();
    ++best.supports_examined;
    // Strict improvement only: lexicographic enumeration order makes the
    // first minimizer (the lexicographically smallest support) stick.
    if (residual < best.residual_norm) {
      best.residual_norm = residual;
      best.support = support;
      best.estimate.setZero();
      for (int i = 0; i < sparsity; ++i)
        best.estimate(support[static_cast<std::size_t>(i)]) = coeffs(i);
    }

    // Advance to the next combination in lexicographic order.
    int pos = sparsity - 1;
    while (pos >= 0 && support[static_cast<std::size_t>(pos)] == cols - sparsity + pos) --pos;
    if (pos < 0) break;
    ++support[static_cast<std::size_t>(pos)];
    for (int i = pos + 1; i < sparsity; ++i)
      support[static_cast<std::size_t>(i)] = support[static_cast<std::size_t>(i - 1)] + 1;
  }
  return best;
}

}  // namespace seqmem
