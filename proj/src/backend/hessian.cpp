#include "kfvio/backend/hessian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kfvio/core/error.hpp"

namespace kfvio {

namespace {

constexpr int kB = HessianPattern::kBlock;

bool is_pose(int component) { return component < state_index::kPoseDim; }

}  // namespace

HessianPattern::HessianPattern(int horizon, int feature_age) : horizon_(horizon), feature_age_(feature_age) {
  if (horizon < 1) fail(ErrorCode::kConfig, "build_pattern: horizon must be >= 1");
  if (feature_age < 1 || feature_age > horizon)
    fail(ErrorCode::kConfig, "build_pattern: feature age must satisfy 1 <= A <= N (A=" +
                                 std::to_string(feature_age) + ", N=" + std::to_string(horizon) + ")");

  // Symbolic factorization: the structure of L column k is the lower pattern
  // of column k merged with the structures of earlier columns whose first
  // off-diagonal entry is k.
  const int n = dim();
  std::vector<std::vector<char>> filled(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    filled[r].assign(static_cast<std::size_t>(r + 1), 0);
    for (int c = 0; c <= r; ++c) filled[r][c] = in_pattern(r, c) ? 1 : 0;
  }
  std::vector<int> rows;
  for (int k = 0; k < n; ++k) {
    rows.clear();
    for (int r = k + 1; r < n; ++r)
      if (filled[r][k]) rows.push_back(r);
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = 0; b <= a; ++b) filled[rows[a]][rows[b]] = 1;
  }
  row_ptr_.assign(static_cast<std::size_t>(n + 1), 0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c <= r; ++c)
      if (filled[r][c]) col_idx_.push_back(c);
    row_ptr_[r + 1] = static_cast<int>(col_idx_.size());
  }

  // MACs of the zero-skipping factorization: for each stored (i, j), the
  // overlap of rows i and j left of column j.
  for (int i = 0; i < n; ++i) {
    for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const int j = col_idx_[p];
      int a = row_ptr_[i], b = row_ptr_[j];
      while (a < row_ptr_[i + 1] && b < row_ptr_[j + 1] && col_idx_[a] < j && col_idx_[b] < j) {
        if (col_idx_[a] == col_idx_[b]) {
          ++sparse_macs_;
          ++a;
          ++b;
        } else if (col_idx_[a] < col_idx_[b]) {
          ++a;
        } else {
          ++b;
        }
      }
    }
  }
}

bool HessianPattern::block_in_pattern(int i, int j) const {
  if (i < 0 || j < 0 || i >= horizon_ || j >= horizon_) return false;
  const int d = std::abs(i - j);
  if (d <= 1 || d <= feature_age_ - 1) return true;
  const int boundary_last = feature_age_ - 2;
  return std::max(i, j) <= boundary_last;
}

bool HessianPattern::in_pattern(int row, int col) const {
  if (row < 0 || col < 0 || row >= dim() || col >= dim()) return false;
  const int i = row / kB, j = col / kB, a = row % kB, b = col % kB;
  if (!block_in_pattern(i, j)) return false;
  const int d = std::abs(i - j);
  if (d <= 1) return true;
  if (is_pose(a) && is_pose(b)) return true;
  // prior boundary: every component of state 0 against the pose of states 1..A-2
  const int boundary_last = feature_age_ - 2;
  if (i == 0 && j <= boundary_last && is_pose(b)) return true;
  if (j == 0 && i <= boundary_last && is_pose(a)) return true;
  return false;
}

double HessianPattern::block_density() const {
  std::int64_t in = 0, total = 0;
  for (int i = 0; i < horizon_; ++i)
    for (int j = i; j < horizon_; ++j) {
      ++total;
      in += block_in_pattern(i, j) ? 1 : 0;
    }
  return static_cast<double>(in) / static_cast<double>(total);
}

double HessianPattern::density() const {
  std::int64_t in = 0;
  const int n = dim();
  for (int r = 0; r < n; ++r)
    for (int c = r; c < n; ++c) in += in_pattern(r, c) ? 1 : 0;
  return static_cast<double>(in) / (0.5 * n * (n + 1.0));
}

double HessianPattern::envelope_density() const {
  const double n = dim();
  return static_cast<double>(stored_entries()) / (0.5 * n * (n + 1.0));
}

int HessianPattern::position(int row, int col) const {
  if (row < col || row < 0 || col < 0 || row >= dim()) return -1;
  const auto first = col_idx_.begin() + row_ptr_[row];
  const auto last = col_idx_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return -1;
  return static_cast<int>(it - col_idx_.begin());
}

std::int64_t HessianPattern::dense_factor_macs() const {
  const std::int64_t n = dim();
  std::int64_t macs = 0;
  for (std::int64_t k = 0; k < n; ++k) macs += k * (n - k);
  return macs;
}

StructuredHessian::StructuredHessian(std::shared_ptr<const HessianPattern> pattern) : pattern_(std::move(pattern)) {
  if (!pattern_) fail(ErrorCode::kInvalidArgument, "StructuredHessian: null pattern");
  values_.assign(pattern_->stored_entries(), 0.0);
  rhs_ = Eigen::VectorXd::Zero(pattern_->dim());
}

void StructuredHessian::accumulate(int row, int col, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
  if (row < 0 || col < 0 || row + rows > dim() || col + cols > dim())
    fail(ErrorCode::kOutOfRange, "StructuredHessian: write outside the matrix");
  const bool straddles = row < col + cols && col < row + rows;
  auto target = [&](int a, int b, int& r, int& c) {
    r = row + a;
    c = col + b;
    if (r < c) {
      if (straddles) return false;
      std::swap(r, c);
    }
    return true;
  };
  int r = 0, c = 0;
  for (int a = 0; a < rows; ++a)
    for (int b = 0; b < cols; ++b)
      if (m(a, b) != 0.0 && target(a, b, r, c) && !pattern_->in_pattern(r, c))
        fail(ErrorCode::kMaskedWrite, "StructuredHessian: write to (" + std::to_string(row + a) + "," +
                                          std::to_string(col + b) + ") is off the pattern");
  for (int a = 0; a < rows; ++a)
    for (int b = 0; b < cols; ++b)
      if (m(a, b) != 0.0 && target(a, b, r, c)) values_[pattern_->position(r, c)] += m(a, b);
}

void StructuredHessian::accumulate(int row, int col, double value) {
  if (row < 0 || col < 0 || row >= dim() || col >= dim())
    fail(ErrorCode::kOutOfRange, "StructuredHessian: write outside the matrix");
  if (value == 0.0) return;
  const int r = std::max(row, col), c = std::min(row, col);
  if (!pattern_->in_pattern(r, c))
    fail(ErrorCode::kMaskedWrite,
         "StructuredHessian: write to (" + std::to_string(row) + "," + std::to_string(col) + ") is off the pattern");
  values_[pattern_->position(r, c)] += value;
}

double StructuredHessian::at(int row, int col) const {
  if (row < 0 || col < 0 || row >= dim() || col >= dim())
    fail(ErrorCode::kOutOfRange, "StructuredHessian: read outside the matrix");
  const int r = std::max(row, col), c = std::min(row, col);
  if (!pattern_->in_pattern(r, c)) return 0.0;
  return values_[pattern_->position(r, c)];
}

Mat15 StructuredHessian::read_block(int i, int j) const {
  Mat15 out;
  for (int a = 0; a < kB; ++a)
    for (int b = 0; b < kB; ++b) out(a, b) = at(i * kB + a, j * kB + b);
  return out;
}

void StructuredHessian::add_diagonal(double lambda) {
  for (int r = 0; r < dim(); ++r) values_[pattern_->position(r, r)] += lambda;
}

void StructuredHessian::set_zero() {
  std::fill(values_.begin(), values_.end(), 0.0);
  rhs_.setZero();
}

Eigen::MatrixXd StructuredHessian::to_dense() const {
  const int n = dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const auto& rp = pattern_->row_ptr();
  const auto& ci = pattern_->col_idx();
  for (int r = 0; r < n; ++r)
    for (int p = rp[r]; p < rp[r + 1]; ++p) {
      out(r, ci[p]) = values_[p];
      out(ci[p], r) = values_[p];
    }
  return out;
}

void SparseCholesky::factorize(const StructuredHessian& h) {
  pattern_ = h.pattern_ptr();
  l_ = h.values();
  const auto& rp = pattern_->row_ptr();
  const auto& ci = pattern_->col_idx();
  const int n = pattern_->dim();
  stats_ = SolverStats{};
  stats_.dense_factor_macs = pattern_->dense_factor_macs();

  for (int i = 0; i < n; ++i) {
    for (int p = rp[i]; p < rp[i + 1]; ++p) {
      const int j = ci[p];
      double s = l_[p];
      int a = rp[i], b = rp[j];
      while (a < p && ci[b] < j) {
        if (ci[a] == ci[b]) {
          s -= l_[a] * l_[b];
          ++stats_.factor_macs;
          ++a;
          ++b;
        } else if (ci[a] < ci[b]) {
          ++a;
        } else {
          ++b;
        }
      }
      if (j < i) {
        l_[p] = s / l_[rp[j + 1] - 1];
      } else {
        if (!(s > 0.0)) fail(ErrorCode::kIndefiniteMatrix, "cholesky: non-positive pivot at index " + std::to_string(i));
        l_[p] = std::sqrt(s);
      }
    }
  }
}

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd& b) {
  if (!pattern_) fail(ErrorCode::kInvalidArgument, "back_substitute: no factor");
  const int n = pattern_->dim();
  if (b.size() != n) fail(ErrorCode::kInvalidArgument, "back_substitute: dimension mismatch");
  const auto& rp = pattern_->row_ptr();
  const auto& ci = pattern_->col_idx();
  stats_.solve_macs = 0;
  stats_.dense_solve_macs = static_cast<std::int64_t>(n) * (n - 1);

  Eigen::VectorXd y = b;
  for (int i = 0; i < n; ++i) {
    double s = y(i);
    for (int p = rp[i]; p < rp[i + 1] - 1; ++p) {
      s -= l_[p] * y(ci[p]);
      ++stats_.solve_macs;
    }
    y(i) = s / l_[rp[i + 1] - 1];
  }
  // L^T x = y, scattering each row of L once its unknown is final
  Eigen::VectorXd x = y;
  for (int i = n - 1; i >= 0; --i) {
    x(i) /= l_[rp[i + 1] - 1];
    for (int p = rp[i]; p < rp[i + 1] - 1; ++p) {
      x(ci[p]) -= l_[p] * x(i);
      ++stats_.solve_macs;
    }
  }
  return x;
}

Eigen::MatrixXd SparseCholesky::factor_dense() const {
  if (!pattern_) return {};
  const int n = pattern_->dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const auto& rp = pattern_->row_ptr();
  const auto& ci = pattern_->col_idx();
  for (int r = 0; r < n; ++r)
    for (int p = rp[r]; p < rp[r + 1]; ++p) out(r, ci[p]) = l_[p];
  return out;
}

}  // namespace kfvio
