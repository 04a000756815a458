#include "seqmem/bases.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace seqmem {
namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_oversample(int oversample) {
  if (oversample < 4)
    throw std::invalid_argument("oversample must be >= 4, got " + std::to_string(oversample));
}

// |DFT| of the column zero-padded to `grid` points: magnitudes of
// sum_m col(m) e^{-2*pi*j*i*m/grid} for i = 0..grid-1.
std::vector<double> padded_dft_magnitudes(Eigen::FFT<double>& fft, const Eigen::VectorXd& column,
                                          int grid) {
  std::vector<std::complex<double>> in(static_cast<std::size_t>(grid));
  for (int m = 0; m < column.size(); ++m) in[static_cast<std::size_t>(m)] = column(m);
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  std::vector<double> mags(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i) mags[static_cast<std::size_t>(i)] = std::abs(out[static_cast<std::size_t>(i)]);
  return mags;
}

struct GridMax {
  double value = -1.0;
  int bin = 0;
};

void track_max(GridMax& best, const std::vector<double>& mags) {
  for (int i = 0; i < static_cast<int>(mags.size()); ++i) {
    if (mags[static_cast<std::size_t>(i)] > best.value) {
      best.value = mags[static_cast<std::size_t>(i)];
      best.bin = i;
    }
  }
}

OrthonormalBasis make_dct(int n) {
  OrthonormalBasis b;
  b.kind = "dct";
  b.size = n;
  b.matrix.resize(n, n);
  for (int k = 0; k < n; ++k) {
    double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int m = 0; m < n; ++m)
      b.matrix(m, k) = scale * std::cos(M_PI * (m + 0.5) * k / n);
  }
  return b;
}

OrthonormalBasis make_haar(int n) {
  if (!is_power_of_two(n))
    throw std::invalid_argument("haar basis requires size to be a power of two, got " +
                                std::to_string(n));
  OrthonormalBasis b;
  b.kind = "haar";
  b.size = n;
  b.matrix = Eigen::MatrixXd::Zero(n, n);
  b.matrix.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  // Wavelet columns, coarsest level first: column 2^level + q has support of
  // length n / 2^level starting at q * n / 2^level, +amp on the first half,
  // -amp on the second, amp chosen for unit norm.
  for (int level = 0; (1 << level) < n; ++level) {
    int blocks = 1 << level;
    int support = n / blocks;
    double amp = std::sqrt(static_cast<double>(blocks) / n);
    for (int q = 0; q < blocks; ++q) {
      int col = blocks + q;
      int start = q * support;
      for (int m = 0; m < support / 2; ++m) {
        b.matrix(start + m, col) = amp;
        b.matrix(start + support / 2 + m, col) = -amp;
      }
    }
  }
  return b;
}

}  // namespace

OrthonormalBasis make_basis(const std::string& kind, int n) {
  if (n < 1) throw std::invalid_argument("basis size must be >= 1, got " + std::to_string(n));
  if (kind == "canonical") {
    OrthonormalBasis b;
    b.kind = kind;
    b.size = n;
    b.matrix = Eigen::MatrixXd::Identity(n, n);
    return b;
  }
  if (kind == "dct") return make_dct(n);
  if (kind == "haar") return make_haar(n);
  throw std::invalid_argument("unknown basis kind \"" + kind +
                              "\" (expected canonical, dct, or haar)");
}

JointBasis joint_basis(const OrthonormalBasis& base, int streams) {
  if (streams < 1)
    throw std::invalid_argument("joint_basis: streams must be >= 1, got " +
                                std::to_string(streams));
  return JointBasis{base, streams};
}

Eigen::MatrixXd joint_block(const JointBasis& jb, int row_block, int col_block) {
  if (row_block < 0 || row_block >= jb.streams || col_block < 0 || col_block >= jb.streams)
    throw std::invalid_argument("joint_block: block index out of range");
  if (row_block == col_block) return jb.base.matrix;
  return Eigen::MatrixXd::Zero(jb.base.size, jb.base.size);
}

Eigen::VectorXd joint_apply(const JointBasis& jb, const Eigen::VectorXd& coeffs) {
  const int n = jb.base.size;
  if (coeffs.size() != static_cast<Eigen::Index>(n) * jb.streams)
    throw std::invalid_argument("joint_apply: coefficient length must equal streams * size");
  Eigen::VectorXd signal(coeffs.size());
  for (int l = 0; l < jb.streams; ++l)
    signal.segment(static_cast<Eigen::Index>(l) * n, n) =
        jb.base.matrix * coeffs.segment(static_cast<Eigen::Index>(l) * n, n);
  return signal;
}

Eigen::MatrixXd right_multiply_joint(const Eigen::MatrixXd& a, const JointBasis& jb) {
  const int n = jb.base.size;
  if (a.cols() != static_cast<Eigen::Index>(n) * jb.streams)
    throw std::invalid_argument("right_multiply_joint: column count must equal streams * size");
  Eigen::MatrixXd out(a.rows(), a.cols());
  for (int l = 0; l < jb.streams; ++l)
    out.middleCols(static_cast<Eigen::Index>(l) * n, n) =
        a.middleCols(static_cast<Eigen::Index>(l) * n, n) * jb.base.matrix;
  return out;
}

CoherenceReport coherence_single(const OrthonormalBasis& basis, int oversample) {
  check_oversample(oversample);
  const int grid = oversample * basis.size;
  Eigen::FFT<double> fft;
  GridMax best;
  for (int col = 0; col < basis.size; ++col)
    track_max(best, padded_dft_magnitudes(fft, basis.matrix.col(col), grid));
  return CoherenceReport{best.value, 2.0 * M_PI * best.bin / grid, oversample};
}

CoherenceReport coherence_joint(const JointBasis& jb, int oversample) {
  check_oversample(oversample);
  const int n = jb.base.size;
  const int grid = oversample * n;
  Eigen::FFT<double> fft;
  GridMax best;
  for (int col_block = 0; col_block < jb.streams; ++col_block) {
    for (int col = 0; col < n; ++col) {
      for (int row_block = 0; row_block < jb.streams; ++row_block) {
        // Off-diagonal blocks of a block-diagonal basis are zero; the norm
        // guard skips them (and any other negligible block column).
        if (row_block != col_block) continue;
        Eigen::VectorXd column = jb.base.matrix.col(col);
        double norm = column.norm();
        if (norm < 1e-12) continue;
        std::vector<double> mags = padded_dft_magnitudes(fft, column, grid);
        for (double& v : mags) v /= norm;
        track_max(best, mags);
      }
    }
  }
  return CoherenceReport{best.value, 2.0 * M_PI * best.bin / grid, oversample};
}

CoherenceReport coherence_lowrank(const Eigen::MatrixXd& right_vectors, int oversample) {
  check_oversample(oversample);
  const int n = static_cast<int>(right_vectors.rows());
  const int rank = static_cast<int>(right_vectors.cols());
  if (rank < 1) throw std::invalid_argument("coherence_lowrank: V must have at least one column");
  Eigen::MatrixXd gram = right_vectors.transpose() * right_vectors;
  double defect = (gram - Eigen::MatrixXd::Identity(rank, rank)).cwiseAbs().maxCoeff();
  if (defect > 1e-8)
    throw std::invalid_argument(
        "coherence_lowrank: columns of V must be orthonormal (V^T V deviates from identity by " +
        std::to_string(defect) + ")");

  const int grid = oversample * n;
  Eigen::FFT<double> fft;
  std::vector<double> energy(static_cast<std::size_t>(grid), 0.0);
  for (int r = 0; r < rank; ++r) {
    std::vector<double> mags = padded_dft_magnitudes(fft, right_vectors.col(r), grid);
    for (int i = 0; i < grid; ++i)
      energy[static_cast<std::size_t>(i)] += mags[static_cast<std::size_t>(i)] * mags[static_cast<std::size_t>(i)];
  }
  GridMax best;
  track_max(best, energy);
  return CoherenceReport{std::sqrt(best.value / rank), 2.0 * M_PI * best.bin / grid, oversample};
}

}  // namespace seqmem
