#include "seqmem/analysis.hpp"

#include "seqmem/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqmem {
namespace {

constexpr std::uint64_t kRipStream = 11;

void check_tangent_factors(const TangentSpace& t) {
  const int rank = static_cast<int>(t.left.cols());
  if (rank != t.right.cols())
    throw std::invalid_argument("tangent space: left and right factors must share a column count");
  if (rank == 0) return;
  double left_defect =
      (t.left.transpose() * t.left - Eigen::MatrixXd::Identity(rank, rank)).cwiseAbs().maxCoeff();
  double right_defect =
      (t.right.transpose() * t.right - Eigen::MatrixXd::Identity(rank, rank)).cwiseAbs().maxCoeff();
  if (left_defect > 1e-8 || right_defect > 1e-8)
    throw std::invalid_argument("tangent space: factor columns must be orthonormal to 1e-8");
}

void check_shape(const TangentSpace& t, const Eigen::MatrixXd& w) {
  if (t.left.cols() == 0) return;
  if (w.rows() != t.left.rows() || w.cols() != t.right.rows())
    throw std::invalid_argument("tangent projection: matrix shape must be rows(Q) x rows(V)");
}

}  // namespace

RipEstimate estimate_rip_delta(const Eigen::MatrixXd& a_eff, int sparsity, int support_samples,
                               std::uint64_t seed) {
  const int cols = static_cast<int>(a_eff.cols());
  if (sparsity < 1) throw std::invalid_argument("estimate_rip_delta: sparsity must be >= 1");
  if (2 * sparsity > cols)
    throw std::invalid_argument("estimate_rip_delta: need 2 * sparsity <= columns, got 2*" +
                                std::to_string(sparsity) + " > " + std::to_string(cols));
  if (support_samples < 1)
    throw std::invalid_argument("estimate_rip_delta: support_samples must be >= 1");

  double max_sq = 0.0;
  double min_sq = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd sub(a_eff.rows(), 2 * sparsity);
  for (int s = 0; s < support_samples; ++s) {
    // Each sample gets its own derived seed, so the first k samples are the
    // same regardless of how many more are requested.
    Rng rng(derive_seed(seed, {kRipStream, static_cast<std::uint64_t>(s)}));
    std::vector<int> support = rng.sample_without_replacement(cols, 2 * sparsity);
    for (int i = 0; i < 2 * sparsity; ++i) sub.col(i) = a_eff.col(support[static_cast<std::size_t>(i)]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
    double top = svd.singularValues()(0);
    double bottom = svd.singularValues()(svd.singularValues().size() - 1);
    max_sq = std::max(max_sq, top * top);
    min_sq = std::min(min_sq, bottom * bottom);
  }

  RipEstimate out;
  out.samples = support_samples;
  out.seed = seed;
  out.scale_c = 0.5 * (max_sq + min_sq);
  out.delta_hat =
      out.scale_c > 0 ? std::max(max_sq / out.scale_c - 1.0, 1.0 - min_sq / out.scale_c) : 0.0;
  return out;
}

double required_nodes_sparse(double c_const, int sparsity, double delta, double mu_joint,
                             int streams, int horizon, double eta) {
  if (c_const <= 0) throw std::invalid_argument("required_nodes_sparse: c_const must be positive");
  if (sparsity < 1) throw std::invalid_argument("required_nodes_sparse: sparsity must be >= 1");
  if (delta <= 0 || delta >= 1)
    throw std::invalid_argument("required_nodes_sparse: delta must be in (0, 1)");
  if (mu_joint <= 0) throw std::invalid_argument("required_nodes_sparse: mu_joint must be positive");
  if (streams < 1 || horizon < 1)
    throw std::invalid_argument("required_nodes_sparse: streams and horizon must be >= 1");
  const double nl = static_cast<double>(streams) * horizon;
  if (nl < 2) throw std::invalid_argument("required_nodes_sparse: N * L must be >= 2");
  const double log_nl = std::log(nl);
  // eta range check in log domain: the lower endpoint (N L)^(-ln^4(N L))
  // underflows double for moderate N L, but its log never does.
  const double log_lower = -std::pow(log_nl, 5);
  if (!(eta > 0) || std::log(eta) < log_lower || std::log(eta) > -1.0)
    throw std::invalid_argument(
        "required_nodes_sparse: eta must lie in [(N*L)^(-ln^4(N*L)), 1/e]");
  return c_const * (sparsity / (delta * delta)) * mu_joint * mu_joint * std::pow(log_nl, 5) *
         (-std::log(eta));
}

double required_nodes_lowrank(double c_const, int rank, double mu_lowrank, int streams,
                              int horizon) {
  if (c_const <= 0) throw std::invalid_argument("required_nodes_lowrank: c_const must be positive");
  if (rank < 1) throw std::invalid_argument("required_nodes_lowrank: rank must be >= 1");
  if (mu_lowrank <= 0)
    throw std::invalid_argument("required_nodes_lowrank: mu_lowrank must be positive");
  if (streams < 1 || horizon < 1)
    throw std::invalid_argument("required_nodes_lowrank: streams and horizon must be >= 1");
  const double nl = static_cast<double>(streams) * horizon;
  if (nl < 2) throw std::invalid_argument("required_nodes_lowrank: N * L must be >= 2");
  return c_const * rank * (horizon + mu_lowrank * mu_lowrank * streams) *
         std::pow(std::log(nl), 3);
}

double sparse_error_bound(double alpha, double beta, double noise_norm, double tail_l1,
                          int sparsity) {
  if (alpha < 0 || beta < 0)
    throw std::invalid_argument("sparse_error_bound: alpha and beta must be >= 0");
  if (noise_norm < 0 || tail_l1 < 0)
    throw std::invalid_argument("sparse_error_bound: noise_norm and tail_l1 must be >= 0");
  if (sparsity < 1) throw std::invalid_argument("sparse_error_bound: sparsity must be >= 1");
  return alpha * noise_norm + beta * tail_l1 / std::sqrt(static_cast<double>(sparsity));
}

double lowrank_error_bound(int streams, int horizon, int nodes, double noise_norm) {
  if (streams < 1 || horizon < 1)
    throw std::invalid_argument("lowrank_error_bound: streams and horizon must be >= 1");
  if (nodes < 1) throw std::invalid_argument("lowrank_error_bound: nodes must be >= 1");
  if (noise_norm < 0) throw std::invalid_argument("lowrank_error_bound: noise_norm must be >= 0");
  const double nl = static_cast<double>(streams) * horizon;
  const double inner = std::min(streams, horizon) * (2.0 * nl + nodes) / nodes;
  return (4.0 * std::sqrt(inner) + 2.0) * noise_norm;
}

Eigen::MatrixXd project_tangent(const TangentSpace& t, const Eigen::MatrixXd& w) {
  check_tangent_factors(t);
  if (t.left.cols() == 0) return Eigen::MatrixXd::Zero(w.rows(), w.cols());
  check_shape(t, w);
  Eigen::MatrixXd row_part = t.left * (t.left.transpose() * w);  // Q Q^T W
  Eigen::MatrixXd col_part = (w * t.right) * t.right.transpose();  // W V V^T
  Eigen::MatrixXd both = t.left * ((t.left.transpose() * w) * t.right) * t.right.transpose();
  return row_part + col_part - both;
}

Eigen::MatrixXd project_tangent_complement(const TangentSpace& t, const Eigen::MatrixXd& w) {
  check_tangent_factors(t);
  if (t.left.cols() == 0) return w;
  check_shape(t, w);
  Eigen::MatrixXd row_removed = w - t.left * (t.left.transpose() * w);
  return row_removed - (row_removed * t.right) * t.right.transpose();
}

double tangent_conditioning(const MatrixForwardMap& forward, const MatrixAdjointMap& adjoint_map,
                            const TangentSpace& t) {
  check_tangent_factors(t);
  if (t.left.cols() == 0) return 0.0;
  const int rows = static_cast<int>(t.left.rows());
  const int cols = static_cast<int>(t.right.rows());

  auto op = [&](const Eigen::MatrixXd& w) {
    Eigen::MatrixXd projected = project_tangent(t, w);
    return Eigen::MatrixXd(project_tangent(t, adjoint_map(forward(projected))) - projected);
  };

  // Deterministic start inside the tangent space; fall back to Q V^T if the
  // all-ones matrix happens to project to (near) zero.
  Eigen::MatrixXd x = project_tangent(t, Eigen::MatrixXd::Ones(rows, cols));
  if (x.norm() < 1e-12) x = t.left * t.right.transpose();
  x /= x.norm();

  double value = 0.0;
  for (int k = 0; k < 200; ++k) {
    Eigen::MatrixXd y = op(x);
    double nu = y.norm();
    if (nu == 0.0) return 0.0;
    bool settled = std::abs(nu - value) <= 1e-10 * std::max(nu, 1e-300);
    value = nu;
    x = y / nu;
    if (settled) break;
  }
  return value;
}

std::pair<bool, bool> dual_certificate_check(const Eigen::MatrixXd& y, const TangentSpace& t,
                                             double gamma) {
  check_tangent_factors(t);
  if (gamma <= 0) throw std::invalid_argument("dual_certificate_check: gamma must be positive");
  check_shape(t, y);
  Eigen::MatrixXd target = t.left * t.right.transpose();
  double tangent_gap = (project_tangent(t, y) - target).norm();
  bool first = tangent_gap <= 1.0 / (2.0 * std::sqrt(2.0) * gamma);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(project_tangent_complement(t, y));
  bool second = svd.singularValues()(0) <= 0.5;
  return {first, second};
}

}  // namespace seqmem
