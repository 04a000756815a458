#include <doctest.h>

#include "seqmem/network.hpp"
#include "seqmem/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

using namespace seqmem;

namespace {

// Oracle: materialize every column as an explicit power W^age * z_stream,
// recomputed from scratch per column.  Independent of both build_operator
// code paths.
Eigen::MatrixXd naive_operator(const EsnNetwork& net) {
  const int horizon = net.spec.horizon;
  const int streams = net.spec.streams;
  Eigen::MatrixXd out(net.spec.nodes, static_cast<Eigen::Index>(horizon) * streams);
  for (int l = 0; l < streams; ++l) {
    for (int age = 0; age < horizon; ++age) {
      Eigen::VectorXd column = net.feedforward.col(l);
      for (int k = 0; k < age; ++k) column = net.connectivity * column;
      out.col(column_index(l, age, horizon)) = column;
    }
  }
  return out;
}

std::vector<NetworkSpec> instance_list(int count) {
  const int nodes[] = {2, 4, 8, 16, 32, 64};
  const int horizons[] = {1, 3, 8, 17, 32};
  const int streams[] = {1, 2, 3, 8};
  std::vector<NetworkSpec> specs;
  for (int i = 0; i < count; ++i) {
    NetworkSpec spec;
    spec.nodes = nodes[i % 6];
    spec.horizon = horizons[i % 5];
    spec.streams = streams[i % 4];
    spec.seed = 1000 + static_cast<std::uint64_t>(i);
    spec.mode = i % 2 == 0 ? ConnectivityMode::kSpectral : ConnectivityMode::kOrthogonalizedGaussian;
    specs.push_back(spec);
  }
  return specs;
}

}  // namespace

TEST_CASE("network: spec validation names the offending constraint") {
  NetworkSpec spec;
  spec.nodes = 7;
  spec.streams = 1;
  spec.horizon = 1;
  CHECK_THROWS_AS(build_network(spec), std::invalid_argument);
  spec.nodes = 0;
  CHECK_THROWS_AS(build_network(spec), std::invalid_argument);
  spec.nodes = 4;
  spec.streams = 0;
  CHECK_THROWS_AS(build_network(spec), std::invalid_argument);
  spec.streams = 1;
  spec.horizon = 0;
  CHECK_THROWS_AS(build_network(spec), std::invalid_argument);
  try {
    NetworkSpec bad;
    bad.nodes = 7;
    build_network(bad);
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("even") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_connectivity_mode("qr"), std::invalid_argument);
  CHECK(parse_connectivity_mode("spectral") == ConnectivityMode::kSpectral);
  CHECK(parse_connectivity_mode("orthogonalized-gaussian") ==
        ConnectivityMode::kOrthogonalizedGaussian);
}

TEST_CASE("network: connectivity is orthogonal in both modes") {
  for (ConnectivityMode mode :
       {ConnectivityMode::kSpectral, ConnectivityMode::kOrthogonalizedGaussian}) {
    NetworkSpec spec;
    spec.nodes = 32;
    spec.streams = 2;
    spec.horizon = 4;
    spec.seed = 5;
    spec.mode = mode;
    EsnNetwork net = build_network(spec);
    Eigen::MatrixXd gram = net.connectivity.transpose() * net.connectivity;
    CHECK((gram - Eigen::MatrixXd::Identity(32, 32)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("network: feedforward variance is about 1/M") {
  NetworkSpec spec;
  spec.nodes = 400;
  spec.streams = 50;
  spec.horizon = 1;
  spec.seed = 17;
  EsnNetwork net = build_network(spec);
  double mean_sq = net.feedforward.squaredNorm() / (400.0 * 50.0);
  CHECK(mean_sq == doctest::Approx(1.0 / 400).epsilon(0.05));
}

TEST_CASE("network: rebuilding from the same spec is bit-identical") {
  NetworkSpec spec;
  spec.nodes = 16;
  spec.streams = 3;
  spec.horizon = 5;
  spec.seed = 99;
  for (ConnectivityMode mode :
       {ConnectivityMode::kSpectral, ConnectivityMode::kOrthogonalizedGaussian}) {
    spec.mode = mode;
    EsnNetwork a = build_network(spec);
    EsnNetwork b = build_network(spec);
    CHECK((a.connectivity - b.connectivity).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.feedforward - b.feedforward).cwiseAbs().maxCoeff() == 0.0);
    if (mode == ConnectivityMode::kSpectral)
      CHECK((a.phases - b.phases).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("network: spectral eigenvalue arguments match the drawn phases") {
  NetworkSpec spec;
  spec.nodes = 24;
  spec.streams = 1;
  spec.horizon = 1;
  spec.seed = 31;
  EsnNetwork net = build_network(spec);

  Eigen::EigenSolver<Eigen::MatrixXd> eig(net.connectivity);
  std::vector<double> observed;
  for (int i = 0; i < spec.nodes; ++i) {
    std::complex<double> ev = eig.eigenvalues()(i);
    CHECK(std::abs(ev) == doctest::Approx(1.0).epsilon(1e-10));  // unit circle
    observed.push_back(std::abs(std::arg(ev)));
  }
  // Each phase w contributes the conjugate pair e^{+-iw}; both arguments fold
  // to the same magnitude min(w, 2pi - w).
  std::vector<double> expected;
  for (int m = 0; m < spec.nodes / 2; ++m) {
    double w = net.phases(m);
    double folded = std::min(w, 2.0 * M_PI - w);
    expected.push_back(folded);
    expected.push_back(folded);
  }
  std::sort(observed.begin(), observed.end());
  std::sort(expected.begin(), expected.end());
  for (int i = 0; i < spec.nodes; ++i)
    CHECK(observed[static_cast<std::size_t>(i)] ==
          doctest::Approx(expected[static_cast<std::size_t>(i)]).epsilon(1e-8));
}

TEST_CASE("operator: both construction paths match explicit powers of W") {
  double worst = 0.0;
  for (const NetworkSpec& spec : instance_list(100)) {
    EsnNetwork net = build_network(spec);
    MeasurementOperator op = build_operator(net);
    Eigen::MatrixXd oracle = naive_operator(net);
    REQUIRE(op.matrix.rows() == oracle.rows());
    REQUIRE(op.matrix.cols() == oracle.cols());
    for (int c = 0; c < oracle.cols(); ++c) {
      double denom = std::max(oracle.col(c).norm(), 1e-300);
      worst = std::max(worst, (op.matrix.col(c) - oracle.col(c)).norm() / denom);
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("operator: stacked history ordering matches the column contract") {
  NetworkSpec spec;
  spec.nodes = 8;
  spec.streams = 2;
  spec.horizon = 3;
  spec.seed = 77;
  EsnNetwork net = build_network(spec);
  MeasurementOperator op = build_operator(net);

  // Column stream * N + age must be W^age z_stream.
  Eigen::VectorXd z1 = net.feedforward.col(1);
  Eigen::VectorXd expect = net.connectivity * (net.connectivity * z1);
  CHECK((op.matrix.col(column_index(1, 2, 3)) - expect).norm() <= 1e-12);

  // stack_history puts input step k+1 (column k) at age N-1-k.
  Eigen::MatrixXd inputs(2, 3);
  inputs << 1, 2, 3, 4, 5, 6;
  Eigen::VectorXd stacked = stack_history(inputs);
  CHECK(stacked(column_index(0, 0, 3)) == 3);  // newest sample of stream 0
  CHECK(stacked(column_index(0, 2, 3)) == 1);  // oldest sample of stream 0
  CHECK(stacked(column_index(1, 1, 3)) == 5);
  CHECK((unstack_history(stacked, 2, 3) - inputs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("evolve: final state equals the operator applied to stacked inputs") {
  Rng rng(123);
  for (const NetworkSpec& spec : instance_list(30)) {
    EsnNetwork net = build_network(spec);
    MeasurementOperator op = build_operator(net);
    Eigen::MatrixXd inputs(spec.streams, spec.horizon);
    for (int i = 0; i < inputs.rows(); ++i)
      for (int j = 0; j < inputs.cols(); ++j) inputs(i, j) = rng.gaussian();
    StateTrajectory traj = evolve(net, inputs);
    CHECK(traj.states.col(0).cwiseAbs().maxCoeff() == 0.0);
    Eigen::VectorXd direct = apply_forward(op, stack_history(inputs));
    double denom = std::max(direct.norm(), 1e-300);
    CHECK((traj.states.col(spec.horizon) - direct).norm() / denom <= 1e-10);
  }
}

TEST_CASE("evolve: optional noise lands on the final state only") {
  NetworkSpec spec;
  spec.nodes = 6;
  spec.streams = 1;
  spec.horizon = 4;
  spec.seed = 3;
  EsnNetwork net = build_network(spec);
  Eigen::MatrixXd inputs = Eigen::MatrixXd::Ones(1, 4);
  Eigen::VectorXd noise = Eigen::VectorXd::Constant(6, 0.5);
  StateTrajectory clean = evolve(net, inputs);
  StateTrajectory noisy = evolve(net, inputs, noise);
  CHECK((noisy.states.col(4) - clean.states.col(4) - noise).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((noisy.states.col(3) - clean.states.col(3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(evolve(net, Eigen::MatrixXd::Ones(2, 4)), std::invalid_argument);
  CHECK_THROWS_AS(evolve(net, Eigen::MatrixXd::Ones(1, 3)), std::invalid_argument);
  CHECK_THROWS_AS(evolve(net, inputs, Eigen::VectorXd::Ones(5)), std::invalid_argument);
}

TEST_CASE("operator: forward/adjoint pass the inner-product identity") {
  Rng rng(321);
  double worst = 0.0;
  for (const NetworkSpec& spec : instance_list(25)) {
    EsnNetwork net = build_network(spec);
    MeasurementOperator op = build_operator(net);
    for (int pair = 0; pair < 4; ++pair) {
      Eigen::VectorXd s(op.matrix.cols()), u(op.matrix.rows());
      for (int i = 0; i < s.size(); ++i) s(i) = rng.gaussian();
      for (int i = 0; i < u.size(); ++i) u(i) = rng.gaussian();
      double lhs = apply_forward(op, s).dot(u);
      double rhs = s.dot(adjoint(op, u));
      double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
  }
  CHECK(worst <= 1e-10);
  NetworkSpec spec = instance_list(1)[0];
  MeasurementOperator op = build_operator(build_network(spec));
  CHECK_THROWS_AS(apply_forward(op, Eigen::VectorXd::Ones(op.matrix.cols() + 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(adjoint(op, Eigen::VectorXd::Ones(op.matrix.rows() + 1)),
                  std::invalid_argument);
}
