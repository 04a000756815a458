#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>

#include "seqmem/solvers.hpp"

namespace seqmem {

/// Empirical restricted-isometry estimate for supports of size 2 * sparsity.
/// `scale_c` is the fitted isometry scale: the midrange of the extreme squared
/// singular values over all sampled supports, C = (S+ + S-) / 2 with
/// S+ = max sigma_max^2 and S- = min sigma_min^2.  `delta_hat` is
/// max(S+/C - 1, 1 - S-/C), so column subsets satisfy
/// C (1 - delta) <= ||A s||^2 / ||s||^2 <= C (1 + delta) on every sampled
/// support.  Using global extremes makes delta_hat non-decreasing as samples
/// are added.
struct RipEstimate {
  double delta_hat = 0.0;
  double scale_c = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
};

RipEstimate estimate_rip_delta(const Eigen::MatrixXd& a_eff, int sparsity, int support_samples,
                               std::uint64_t seed);

/// Node-count sufficient for sparse recovery:
/// c * (sparsity / delta^2) * mu_joint^2 * ln^5(N L) * ln(1 / eta).
/// eta must lie in [(N L)^(-ln^4(N L)), 1/e]; the check runs in log domain so
/// the lower endpoint never underflows.
double required_nodes_sparse(double c_const, int sparsity, double delta, double mu_joint,
                             int streams, int horizon, double eta);

/// Node-count sufficient for low-rank recovery:
/// c * rank * (N + mu_lowrank^2 * L) * ln^3(L N).
double required_nodes_lowrank(double c_const, int rank, double mu_lowrank, int streams,
                              int horizon);

/// alpha * noise_norm + beta * tail_l1 / sqrt(sparsity): recovery error in
/// terms of the noise level and the l1 tail of the best sparse approximation.
double sparse_error_bound(double alpha, double beta, double noise_norm, double tail_l1,
                          int sparsity);

/// (4 * sqrt(min(N, L) * (2 N L + M) / M) + 2) * noise_norm.
double lowrank_error_bound(int streams, int horizon, int nodes, double noise_norm);

/// Tangent space of the rank-R manifold at Q * V^T: Q is L x R, V is N x R,
/// both with orthonormal columns (checked to 1e-8 by the operations below).
/// R = 0 (empty factors) denotes the zero matrix's degenerate tangent space.
struct TangentSpace {
  Eigen::MatrixXd left;   ///< Q
  Eigen::MatrixXd right;  ///< V
};

/// P_T(W) = Q Q^T W + W V V^T - Q Q^T W V V^T.
Eigen::MatrixXd project_tangent(const TangentSpace& t, const Eigen::MatrixXd& w);

/// P_T-perp(W) = (I - Q Q^T) W (I - V V^T).
Eigen::MatrixXd project_tangent_complement(const TangentSpace& t, const Eigen::MatrixXd& w);

/// Spectral norm of W -> P_T(A*(A(P_T(W)))) - P_T(W), by power iteration in
/// matrix space.  Measures how far the measurement map is from an isometry on
/// the tangent space; it shrinks as the number of measurements grows.
double tangent_conditioning(const MatrixForwardMap& forward, const MatrixAdjointMap& adjoint_map,
                            const TangentSpace& t);

/// Checks the two dual-certificate conditions for a candidate Y:
/// first:  ||P_T(Y) - Q V^T||_F <= 1 / (2 sqrt(2) gamma)
/// second: ||P_T-perp(Y)||_2 <= 1/2.
std::pair<bool, bool> dual_certificate_check(const Eigen::MatrixXd& y, const TangentSpace& t,
                                             double gamma);

}  // namespace seqmem
