#pragma once

#include <Eigen/Dense>

#include <string>

namespace seqmem {

/// An orthonormal basis of R^n, stored densely with basis vectors as columns.
/// Kinds: "canonical" (identity), "dct" (orthonormal DCT-II), "haar"
/// (orthonormal Haar wavelets; size must be a power of two).
struct OrthonormalBasis {
  std::string kind;
  int size = 0;
  Eigen::MatrixXd matrix;
};

/// Block-diagonal basis of R^(L*N): L copies of an N x N base along the
/// diagonal, one block per input stream.  Stored implicitly (base + stream
/// count) so large joint bases never materialize an (L*N)^2 matrix.
struct JointBasis {
  OrthonormalBasis base;
  int streams = 1;
};

/// Result of a coherence scan over the frequency grid t_i = 2*pi*i/(g*n),
/// i = 0..g*n-1 (g = oversample).  `argmax_t` is the first grid point
/// attaining the maximum.
struct CoherenceReport {
  double mu = 0.0;
  double argmax_t = 0.0;
  int oversample = 0;
};

OrthonormalBasis make_basis(const std::string& kind, int n);

JointBasis joint_basis(const OrthonormalBasis& base, int streams);

/// The (row_block, col_block) sub-block of the joint basis: the base matrix on
/// the diagonal, zero elsewhere.
Eigen::MatrixXd joint_block(const JointBasis& jb, int row_block, int col_block);

/// signal = Psi * coeffs, applied block by block.
Eigen::VectorXd joint_apply(const JointBasis& jb, const Eigen::VectorXd& coeffs);

/// A * Psi for an M x (L*N) matrix A, applied block by block.
Eigen::MatrixXd right_multiply_joint(const Eigen::MatrixXd& a, const JointBasis& jb);

/// Largest modulus of the discretized Fourier transform of any basis column:
/// mu = max_n max_i |sum_m Psi(m, n) e^{-j t_i m}|.  Computed as a zero-padded
/// DFT of each column on a grid of oversample * n points.  oversample >= 4.
CoherenceReport coherence_single(const OrthonormalBasis& basis, int oversample = 8);

/// Joint-basis generalization: the same scan over every (row_block, col_block,
/// column) triple, normalized by the block-column norm; block columns with
/// norm below 1e-12 are skipped.  For a block-diagonal joint basis this equals
/// coherence_single of the base.
CoherenceReport coherence_joint(const JointBasis& jb, int oversample = 8);

/// Low-rank coherence of an N x R orthonormal frame V:
/// mu^2 = (1/R) * max_i ||V^T f_i||^2 with f_i the Fourier vector at grid
/// frequency t_i.  Throws if V^T V differs from identity by more than 1e-8.
CoherenceReport coherence_lowrank(const Eigen::MatrixXd& right_vectors, int oversample = 8);

}  // namespace seqmem
