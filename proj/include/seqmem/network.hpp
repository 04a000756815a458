#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

namespace seqmem {

/// How the recurrent connectivity matrix W is drawn.
///  - kSpectral: W = Q * G * Q^T with G a block-diagonal of 2x2 rotations
///    whose angles are i.i.d. uniform on [0, 2pi), and Q a Haar-random
///    orthogonal matrix.  The eigenvalues of W are the unit-circle pairs
///    e^{+-i w_m}, which makes powers of W cheap to apply in closed form.
///  - kOrthogonalizedGaussian: W is the Q factor of a QR decomposition of an
///    i.i.d. Gaussian matrix (Haar-random orthogonal), with no closed-form
///    power shortcut.
enum class ConnectivityMode { kSpectral, kOrthogonalizedGaussian };

ConnectivityMode parse_connectivity_mode(const std::string& text);
std::string to_string(ConnectivityMode mode);

/// Dimensions and seeding for one recurrent network instance.  A spec is the
/// canonical serialized form of a network: rebuilding from an identical spec
/// reproduces every matrix bit for bit, so matrices are never dumped to disk.
struct NetworkSpec {
  int nodes = 0;        ///< M: state dimension; must be even and >= 2.
  int streams = 1;      ///< L: number of parallel input streams; >= 1.
  int horizon = 1;      ///< N: number of past time steps measured; >= 1.
  std::uint64_t seed = 0;
  ConnectivityMode mode = ConnectivityMode::kSpectral;
};

bool operator==(const NetworkSpec& a, const NetworkSpec& b);

/// A realized network: orthogonal connectivity W (M x M) and feed-forward
/// weights Z (M x L) with i.i.d. N(0, 1/M) entries.  In spectral mode,
/// `phases` holds the M/2 rotation angles and `eigenbasis` the orthogonal
/// factor Q with W = Q * rot(phases) * Q^T; in orthogonalized-Gaussian mode
/// `phases` is empty and `eigenbasis` equals `connectivity`.
struct EsnNetwork {
  NetworkSpec spec;
  Eigen::VectorXd phases;
  Eigen::MatrixXd eigenbasis;
  Eigen::MatrixXd feedforward;
  Eigen::MatrixXd connectivity;
};

/// States x[0..N] of the linear recursion x[n] = W x[n-1] + Z s[n], x[0] = 0.
/// Column n of `states` is x[n]; there are N+1 columns.
struct StateTrajectory {
  Eigen::MatrixXd states;
};

/// The linear map from a stacked input history to the network state x[N].
/// Column c = stream * N + age holds W^age * z_stream: `age` counts back from
/// the most recent step (age 0 = newest).  The matching stacked input vector
/// is produced by stack_history().
struct MeasurementOperator {
  int nodes = 0;    ///< M
  int streams = 0;  ///< L
  int horizon = 0;  ///< N
  Eigen::MatrixXd matrix;  ///< M x (N*L)
};

/// Flat index of (stream, age) under the operator's column ordering.
inline int column_index(int stream, int age, int horizon) {
  return stream * horizon + age;
}

/// Stack an input history S (L x N, column k = the inputs at step k+1, oldest
/// first) into the newest-first vector the operator acts on:
/// stacked[stream * N + age] = S(stream, N - 1 - age).
Eigen::VectorXd stack_history(const Eigen::MatrixXd& inputs);

/// Inverse of stack_history().
Eigen::MatrixXd unstack_history(const Eigen::VectorXd& stacked, int streams, int horizon);

/// Draw a network from its spec.  Throws std::invalid_argument naming the
/// offending field if the spec violates nodes even/>=2, streams >= 1, or
/// horizon >= 1.
EsnNetwork build_network(const NetworkSpec& spec);

/// Run the recursion over an L x N input block (column k = step k+1).  If
/// `state_noise` is given (length M) it is added to the final state x[N].
StateTrajectory evolve(const EsnNetwork& network, const Eigen::MatrixXd& inputs,
                       const std::optional<Eigen::VectorXd>& state_noise = std::nullopt);

/// Assemble the measurement matrix.  Spectral mode evaluates W^age in the
/// rotation eigenbasis (exact closed form, O(M) per column after two basis
/// changes); orthogonalized-Gaussian mode iterates B <- W * B one age at a
/// time.  Both paths agree with materialized powers of W to ~1e-12.
MeasurementOperator build_operator(const EsnNetwork& network);

/// x = A * stacked.  Dimension mismatches throw std::invalid_argument.
Eigen::VectorXd apply_forward(const MeasurementOperator& op, const Eigen::VectorXd& stacked);

/// A^T * state.
Eigen::VectorXd adjoint(const MeasurementOperator& op, const Eigen::VectorXd& state);

}  // namespace seqmem
