#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace transolve {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted and unique within
/// each row; explicit zeros are allowed but never produced by the builders.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
            std::vector<std::size_t> col_idx, std::vector<double> values);

  /// Duplicates are summed; entries that sum to exactly zero are dropped.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols,
                                 std::vector<Triplet> triplets);
  static CsrMatrix identity(std::size_t n);
  static CsrMatrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }

  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  /// Entry lookup by binary search; 0 when structurally absent.
  double at(std::size_t i, std::size_t j) const;
  std::vector<double> diagonal() const;
  CsrMatrix transpose() const;

  /// max |a_ij - a_ji| over all stored entries of a square matrix.
  double symmetry_defect() const;
  bool is_structurally_symmetric() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x);
std::vector<double> transpose_spmv(const CsrMatrix& a, std::span<const double> x);

/// y = b - A x
std::vector<double> residual(const CsrMatrix& a, std::span<const double> x,
                             std::span<const double> b);

/// Sparse product A*B (Gustavson with a dense accumulator).
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b);
/// P^T A P.
CsrMatrix triple_product(const CsrMatrix& p, const CsrMatrix& a);
/// (A + A^T) / 2.
CsrMatrix symmetrize(const CsrMatrix& a);
/// Principal submatrix on the given (sorted or unsorted) index list; the i-th
/// row of the result corresponds to nodes[i].
CsrMatrix principal_submatrix(const CsrMatrix& a, std::span<const std::size_t> nodes);

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix to_dense(const CsrMatrix& a);

struct LdltOptions {
  /// Pivots at or below pivot_tol * max|diag| are treated as exact zeros.
  double pivot_tol = 1e-13;
  /// Negative pivots below -negative_tol * max|diag| mean the input is indefinite.
  double negative_tol = 1e-8;
  /// Treat a rank deficiency as the constant kernel: project the right-hand
  /// side and the solution onto the mean-zero subspace.
  bool constant_kernel = false;
};

/// LDL^T factorization with symmetric (diagonal) pivoting for symmetric
/// positive semidefinite matrices.
class DenseLdlt {
 public:
  explicit DenseLdlt(DenseMatrix a, LdltOptions options = {});

  std::vector<double> solve(std::span<const double> b) const;
  std::size_t size() const { return n_; }
  std::size_t rank() const { return rank_; }
  bool singular() const { return rank_ < n_; }

 private:
  std::size_t n_ = 0;
  std::size_t rank_ = 0;
  LdltOptions options_;
  DenseMatrix factor_;  // unit lower triangle holds L, diagonal holds D
  std::vector<std::size_t> perm_;
};

std::vector<double> dense_sym_solve(const DenseMatrix& a, std::span<const double> b,
                                    LdltOptions options = {});

struct PcgResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  bool converged = false;
  double relative_residual = 0.0;
  std::vector<double> history;
};

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
/// With constant_kernel the right-hand side is projected to mean zero and
/// the returned solution is mean zero.
PcgResult pcg_jacobi(const CsrMatrix& a, std::span<const double> b, double tol,
                     std::size_t max_iter, bool constant_kernel = false);

}  // namespace transolve
