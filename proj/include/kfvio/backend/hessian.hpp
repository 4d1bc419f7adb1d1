#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "kfvio/geometry/state.hpp"

namespace kfvio {

/// Fixed nonzero pattern of the 15N x 15N smoother Hessian.
///
/// Block (i,j) is in the pattern when |i-j| <= A-1, |i-j| == 1 or both states
/// sit in the marginalization-prior boundary (state 0 and states 1..A-2).
/// Inside a block, IMU-adjacent pairs and the diagonal are fully coupled,
/// vision-only pairs couple only the (theta, p) components, and the prior
/// couples every component of state 0 with the pose of boundary states.
class HessianPattern {
 public:
  static constexpr int kBlock = state_index::kDim;

  /// Throws kConfig unless 1 <= feature_age <= horizon.
  HessianPattern(int horizon, int feature_age);

  int horizon() const { return horizon_; }
  int feature_age() const { return feature_age_; }
  int dim() const { return horizon_ * kBlock; }

  bool block_in_pattern(int i, int j) const;
  bool in_pattern(int row, int col) const;

  /// Fraction of upper-triangle blocks (diagonal included) in the mask.
  double block_density() const;
  /// Fraction of upper-triangle elements in the pattern.
  double density() const;
  /// Fraction of the lower triangle held by the Cholesky fill envelope.
  double envelope_density() const;

  /// Lower-triangular fill envelope in CSR form, columns ascending per row,
  /// diagonal last.
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  std::size_t stored_entries() const { return col_idx_.size(); }
  /// Index of (row, col) in the envelope (row >= col), or -1.
  int position(int row, int col) const;

  /// Multiply-accumulates of a dense Cholesky of this dimension, and of the
  /// zero-skipping factorization restricted to the envelope.
  std::int64_t dense_factor_macs() const;
  std::int64_t sparse_factor_macs() const { return sparse_macs_; }

 private:
  int horizon_;
  int feature_age_;
  std::vector<int> row_ptr_;
  std::vector<int> col_idx_;
  std::int64_t sparse_macs_ = 0;
};

/// Symmetric matrix stored on the fill envelope of a pattern (lower triangle),
/// plus its right-hand side.
class StructuredHessian {
 public:
  explicit StructuredHessian(std::shared_ptr<const HessianPattern> pattern);

  const HessianPattern& pattern() const { return *pattern_; }
  std::shared_ptr<const HessianPattern> pattern_ptr() const { return pattern_; }
  int dim() const { return pattern_->dim(); }

  /// Adds M at element offset (row, col). A rectangle straddling the diagonal
  /// is taken as symmetric and only its lower part is read. Nonzero entries
  /// off the pattern throw kMaskedWrite before anything is written.
  void accumulate(int row, int col, const Eigen::Ref<const Eigen::MatrixXd>& m);
  void accumulate(int row, int col, double value);
  void accumulate_block(int i, int j, const Mat15& m) { accumulate(i * 15, j * 15, m); }

  double at(int row, int col) const;
  Mat15 read_block(int i, int j) const;

  Eigen::VectorXd& rhs() { return rhs_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }

  void add_diagonal(double lambda);
  void set_zero();
  Eigen::MatrixXd to_dense() const;
  const std::vector<double>& values() const { return values_; }

 private:
  std::shared_ptr<const HessianPattern> pattern_;
  std::vector<double> values_;
  Eigen::VectorXd rhs_;
};

struct SolverStats {
  std::int64_t factor_macs = 0;
  std::int64_t dense_factor_macs = 0;
  std::int64_t solve_macs = 0;
  std::int64_t dense_solve_macs = 0;
};

/// Zero-skipping Cholesky on the fill envelope, factor held in place.
class SparseCholesky {
 public:
  /// Throws kIndefiniteMatrix naming the pivot index on a non-positive pivot.
  void factorize(const StructuredHessian& h);
  /// Solves L L^T x = b. Throws kInvalidArgument on a dimension mismatch.
  Eigen::VectorXd solve(const Eigen::VectorXd& b);

  Eigen::MatrixXd factor_dense() const;
  const SolverStats& stats() const { return stats_; }

 private:
  std::shared_ptr<const HessianPattern> pattern_;
  std::vector<double> l_;
  SolverStats stats_;
};

}  // namespace kfvio
