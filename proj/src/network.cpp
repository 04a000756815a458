#include "seqmem/network.hpp"

#include "seqmem/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace seqmem {
namespace {

// Sub-stream tags for derive_seed so the phase draw, the eigenbasis draw and
// the feed-forward draw are independent of each other and of sampling order.
constexpr std::uint64_t kPhaseStream = 1;
constexpr std::uint64_t kBasisStream = 2;
constexpr std::uint64_t kFeedforwardStream = 3;
constexpr std::uint64_t kConnectivityStream = 4;

Eigen::MatrixXd gaussian_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd g(rows, cols);
  // Column-major fill order; part of the reproducibility contract.
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) g(i, j) = rng.gaussian();
  return g;
}

// Q factor of a QR decomposition of an i.i.d. Gaussian matrix, with the signs
// fixed so that diag(R) > 0.  The sign fix makes the draw Haar-distributed and
// removes the sign ambiguity of the factorization, so the result is a pure
// function of the seed.
Eigen::MatrixXd haar_orthogonal(int m, Rng& rng) {
  Eigen::MatrixXd g = gaussian_matrix(m, m, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd rdiag = qr.matrixQR().diagonal();
  for (int j = 0; j < m; ++j)
    if (rdiag(j) < 0) q.col(j) = -q.col(j);
  return q;
}

// Apply the block-diagonal rotation G^age (2x2 blocks of angle phases[m]) to
// each column of y in place.  O(M) per column.
void rotate_pairs(Eigen::MatrixXd& y, const Eigen::VectorXd& phases, double age) {
  for (int m = 0; m < phases.size(); ++m) {
    double c = std::cos(age * phases(m));
    double s = std::sin(age * phases(m));
    for (int j = 0; j < y.cols(); ++j) {
      double a = y(2 * m, j);
      double b = y(2 * m + 1, j);
      y(2 * m, j) = c * a - s * b;
      y(2 * m + 1, j) = s * a + c * b;
    }
  }
}

}  // namespace

ConnectivityMode parse_connectivity_mode(const std::string& text) {
  if (text == "spectral") return ConnectivityMode::kSpectral;
  if (text == "orthogonalized-gaussian") return ConnectivityMode::kOrthogonalizedGaussian;
  throw std::invalid_argument("mode must be \"spectral\" or \"orthogonalized-gaussian\", got \"" +
                              text + "\"");
}

std::string to_string(ConnectivityMode mode) {
  return mode == ConnectivityMode::kSpectral ? "spectral" : "orthogonalized-gaussian";
}

bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
  return a.nodes == b.nodes && a.streams == b.streams && a.horizon == b.horizon &&
         a.seed == b.seed && a.mode == b.mode;
}

Eigen::VectorXd stack_history(const Eigen::MatrixXd& inputs) {
  const int streams = static_cast<int>(inputs.rows());
  const int horizon = static_cast<int>(inputs.cols());
  Eigen::VectorXd stacked(static_cast<Eigen::Index>(streams) * horizon);
  for (int l = 0; l < streams; ++l)
    for (int age = 0; age < horizon; ++age)
      stacked(column_index(l, age, horizon)) = inputs(l, horizon - 1 - age);
  return stacked;
}

Eigen::MatrixXd unstack_history(const Eigen::VectorXd& stacked, int streams, int horizon) {
  if (stacked.size() != static_cast<Eigen::Index>(streams) * horizon)
    throw std::invalid_argument("unstack_history: vector length does not equal streams * horizon");
  Eigen::MatrixXd inputs(streams, horizon);
  for (int l = 0; l < streams; ++l)
    for (int age = 0; age < horizon; ++age)
      inputs(l, horizon - 1 - age) = stacked(column_index(l, age, horizon));
  return inputs;
}

EsnNetwork build_network(const NetworkSpec& spec) {
  if (spec.nodes < 2 || spec.nodes % 2 != 0)
    throw std::invalid_argument("nodes must be even and >= 2, got " + std::to_string(spec.nodes));
  if (spec.streams < 1)
    throw std::invalid_argument("streams must be >= 1, got " + std::to_string(spec.streams));
  if (spec.horizon < 1)
    throw std::invalid_argument("horizon must be >= 1, got " + std::to_string(spec.horizon));

  EsnNetwork net;
  net.spec = spec;

  const int m = spec.nodes;
  Rng feed_rng(derive_seed(spec.seed, {kFeedforwardStream}));
  net.feedforward = gaussian_matrix(m, spec.streams, feed_rng) / std::sqrt(static_cast<double>(m));

  if (spec.mode == ConnectivityMode::kSpectral) {
    Rng phase_rng(derive_seed(spec.seed, {kPhaseStream}));
    net.phases.resize(m / 2);
    for (int i = 0; i < m / 2; ++i) net.phases(i) = 2.0 * M_PI * phase_rng.uniform();

    Rng basis_rng(derive_seed(spec.seed, {kBasisStream}));
    net.eigenbasis = haar_orthogonal(m, basis_rng);

    Eigen::MatrixXd rotated = net.eigenbasis.transpose();
    rotate_pairs(rotated, net.phases, 1.0);
    net.connectivity = net.eigenbasis * rotated;  // Q * G * Q^T
  } else {
    Rng conn_rng(derive_seed(spec.seed, {kConnectivityStream}));
    net.connectivity = haar_orthogonal(m, conn_rng);
    net.eigenbasis = net.connectivity;
  }
  return net;
}

StateTrajectory evolve(const EsnNetwork& network, const Eigen::MatrixXd& inputs,
                       const std::optional<Eigen::VectorXd>& state_noise) {
  const int m = network.spec.nodes;
  const int horizon = network.spec.horizon;
  if (inputs.rows() != network.spec.streams)
    throw std::invalid_argument("evolve: inputs must have one row per stream");
  if (inputs.cols() != horizon)
    throw std::invalid_argument("evolve: inputs must have horizon columns");
  if (state_noise && state_noise->size() != m)
    throw std::invalid_argument("evolve: state_noise length must equal nodes");

  StateTrajectory out;
  out.states = Eigen::MatrixXd::Zero(m, horizon + 1);
  for (int n = 1; n <= horizon; ++n)
    out.states.col(n) =
        network.connectivity * out.states.col(n - 1) + network.feedforward * inputs.col(n - 1);
  if (state_noise) out.states.col(horizon) += *state_noise;
  return out;
}

MeasurementOperator build_operator(const EsnNetwork& network) {
  const int m = network.spec.nodes;
  const int streams = network.spec.streams;
  const int horizon = network.spec.horizon;

  MeasurementOperator op;
  op.nodes = m;
  op.streams = streams;
  op.horizon = horizon;
  op.matrix.resize(m, static_cast<Eigen::Index>(streams) * horizon);

  if (network.spec.mode == ConnectivityMode::kSpectral) {
    // W^age * Z = Q * G^age * (Q^T Z): all real rotation arithmetic, no
    // complex intermediates to truncate.
    Eigen::MatrixXd in_basis = network.eigenbasis.transpose() * network.feedforward;
    for (int age = 0; age < horizon; ++age) {
      Eigen::MatrixXd rotated = in_basis;
      rotate_pairs(rotated, network.phases, static_cast<double>(age));
      Eigen::MatrixXd block = network.eigenbasis * rotated;  // M x L
      for (int l = 0; l < streams; ++l) op.matrix.col(column_index(l, age, horizon)) = block.col(l);
    }
  } else {
    Eigen::MatrixXd block = network.feedforward;
    for (int age = 0; age < horizon; ++age) {
      if (age > 0) block = network.connectivity * block;
      for (int l = 0; l < streams; ++l) op.matrix.col(column_index(l, age, horizon)) = block.col(l);
    }
  }
  return op;
}

Eigen::VectorXd apply_forward(const MeasurementOperator& op, const Eigen::VectorXd& stacked) {
  if (stacked.size() != op.matrix.cols())
    throw std::invalid_argument("apply_forward: stacked length must equal streams * horizon");
  return op.matrix * stacked;
}

Eigen::VectorXd adjoint(const MeasurementOperator& op, const Eigen::VectorXd& state) {
  if (state.size() != op.matrix.rows())
    throw std::invalid_argument("adjoint: state length must equal nodes");
  return op.matrix.transpose() * state;
}

}  // namespace seqmem
