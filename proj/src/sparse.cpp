#include "transolve/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "transolve/error.hpp"
#include "transolve/vector_ops.hpp"

namespace transolve {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                     std::vector<std::size_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 ||
      row_ptr_.back() != col_idx_.size() || col_idx_.size() != values_.size()) {
    throw InvalidInput("CsrMatrix: inconsistent array sizes");
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) throw InvalidInput("CsrMatrix: row_ptr not monotone");
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] >= cols_) throw InvalidInput("CsrMatrix: column index out of range");
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1]) {
        throw InvalidInput("CsrMatrix: column indices must be sorted and unique");
      }
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                   std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) throw InvalidInput("triplet index out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> row_ptr(rows + 1, 0);
  std::vector<std::size_t> col_idx;
  std::vector<double> values;
  col_idx.reserve(triplets.size());
  values.reserve(triplets.size());
  std::size_t k = 0;
  while (k < triplets.size()) {
    const std::size_t r = triplets[k].row;
    const std::size_t c = triplets[k].col;
    double v = 0.0;
    while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) {
      v += triplets[k].value;
      ++k;
    }
    if (v != 0.0) {
      col_idx.push_back(c);
      values.push_back(v);
      ++row_ptr[r + 1];
    }
  }
  for (std::size_t i = 0; i < rows; ++i) row_ptr[i + 1] += row_ptr[i];
  return CsrMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  std::vector<double> ones(n, 1.0);
  return diagonal(ones);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> row_ptr(n + 1);
  std::vector<std::size_t> col_idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    row_ptr[i + 1] = i + 1;
    col_idx[i] = i;
  }
  return CsrMatrix(n, n, std::move(row_ptr), std::move(col_idx),
                   std::vector<double>(d.begin(), d.end()));
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto cols = row_cols(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return 0.0;
  return values_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(std::min(rows_, cols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<std::size_t> row_ptr(cols_ + 1, 0);
  for (std::size_t c : col_idx_) ++row_ptr[c + 1];
  for (std::size_t j = 0; j < cols_; ++j) row_ptr[j + 1] += row_ptr[j];
  std::vector<std::size_t> next(row_ptr.begin(), row_ptr.end() - 1);
  std::vector<std::size_t> col_idx(nnz());
  std::vector<double> values(nnz());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t dst = next[col_idx_[k]]++;
      col_idx[dst] = i;
      values[dst] = values_[k];
    }
  }
  return CsrMatrix(cols_, rows_, std::move(row_ptr), std::move(col_idx), std::move(values));
}

double CsrMatrix::symmetry_defect() const {
  if (rows_ != cols_) throw DimensionMismatch("symmetry_defect: matrix is not square");
  double defect = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto cols = row_cols(i);
    const auto vals = row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      defect = std::max(defect, std::abs(vals[k] - at(cols[k], i)));
    }
  }
  return defect;
}

bool CsrMatrix::is_structurally_symmetric() const {
  if (rows_ != cols_) return false;
  const CsrMatrix t = transpose();
  return std::equal(row_ptr_.begin(), row_ptr_.end(), t.row_ptr_.begin()) &&
         std::equal(col_idx_.begin(), col_idx_.end(), t.col_idx_.begin());
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.cols() || y.size() != a.rows()) {
    throw DimensionMismatch("spmv: shape mismatch");
  }
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto va = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) s += va[k] * x[ci[k]];
    y[i] = s;
  }
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.rows());
  spmv(a, x, y);
  return y;
}

std::vector<double> transpose_spmv(const CsrMatrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) throw DimensionMismatch("transpose_spmv: shape mismatch");
  std::vector<double> y(a.cols(), 0.0);
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto va = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) y[ci[k]] += va[k] * x[i];
  }
  return y;
}

std::vector<double> residual(const CsrMatrix& a, std::span<const double> x,
                             std::span<const double> b) {
  std::vector<double> r = spmv(a, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return r;
}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("multiply: inner dimensions differ");
  const std::size_t n = b.cols();
  std::vector<std::size_t> row_ptr(a.rows() + 1, 0);
  std::vector<std::size_t> col_idx;
  std::vector<double> values;
  std::vector<double> acc(n, 0.0);
  std::vector<std::size_t> marker(n, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> pattern;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    pattern.clear();
    const auto acols = a.row_cols(i);
    const auto avals = a.row_values(i);
    for (std::size_t ka = 0; ka < acols.size(); ++ka) {
      const std::size_t k = acols[ka];
      const auto bcols = b.row_cols(k);
      const auto bvals = b.row_values(k);
      for (std::size_t kb = 0; kb < bcols.size(); ++kb) {
        const std::size_t j = bcols[kb];
        if (marker[j] != i) {
          marker[j] = i;
          acc[j] = 0.0;
          pattern.push_back(j);
        }
        acc[j] += avals[ka] * bvals[kb];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (std::size_t j : pattern) {
      if (acc[j] != 0.0) {
        col_idx.push_back(j);
        values.push_back(acc[j]);
      }
    }
    row_ptr[i + 1] = col_idx.size();
  }
  return CsrMatrix(a.rows(), n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

CsrMatrix triple_product(const CsrMatrix& p, const CsrMatrix& a) {
  if (a.rows() != a.cols() || p.rows() != a.rows()) {
    throw DimensionMismatch("triple_product: shapes inconsistent");
  }
  const CsrMatrix ap = multiply(a, p);
  return multiply(p.transpose(), ap);
}

CsrMatrix symmetrize(const CsrMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("symmetrize: matrix is not square");
  const CsrMatrix t = a.transpose();
  std::vector<Triplet> trips;
  trips.reserve(a.nnz() + t.nnz());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto c1 = a.row_cols(i);
    const auto v1 = a.row_values(i);
    for (std::size_t k = 0; k < c1.size(); ++k) trips.push_back({i, c1[k], 0.5 * v1[k]});
    const auto c2 = t.row_cols(i);
    const auto v2 = t.row_values(i);
    for (std::size_t k = 0; k < c2.size(); ++k) trips.push_back({i, c2[k], 0.5 * v2[k]});
  }
  return CsrMatrix::from_triplets(a.rows(), a.cols(), std::move(trips));
}

CsrMatrix principal_submatrix(const CsrMatrix& a, std::span<const std::size_t> nodes) {
  constexpr std::size_t absent = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> local(a.rows(), absent);
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = i;
  std::vector<Triplet> trips;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto cols = a.row_cols(nodes[i]);
    const auto vals = a.row_values(nodes[i]);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (local[cols[k]] != absent) trips.push_back({i, local[cols[k]], vals[k]});
    }
  }
  return CsrMatrix::from_triplets(nodes.size(), nodes.size(), std::move(trips));
}

DenseMatrix to_dense(const CsrMatrix& a) {
  DenseMatrix d(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) d(i, cols[k]) = vals[k];
  }
  return d;
}

DenseLdlt::DenseLdlt(DenseMatrix a, LdltOptions options)
    : n_(a.rows()), options_(options), factor_(std::move(a)), perm_(n_) {
  if (factor_.rows() != factor_.cols()) throw DimensionMismatch("DenseLdlt: matrix is not square");
  for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n_; ++i) max_diag = std::max(max_diag, std::abs(factor_(i, i)));
  const double zero_tol = options_.pivot_tol * max_diag;
  const double neg_tol = options_.negative_tol * max_diag;

  DenseMatrix& f = factor_;
  rank_ = n_;
  for (std::size_t k = 0; k < n_; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n_; ++i) {
      if (f(i, i) > f(p, p)) p = i;
    }
    if (p != k) {
      // symmetric swap of rows/columns k and p in the active (lower) part and in L
      for (std::size_t j = 0; j < n_; ++j) std::swap(f(k, j), f(p, j));
      for (std::size_t i = 0; i < n_; ++i) std::swap(f(i, k), f(i, p));
      std::swap(perm_[k], perm_[p]);
    }
    const double d = f(k, k);
    if (d <= zero_tol) {
      for (std::size_t i = k; i < n_; ++i) {
        if (f(i, i) < -neg_tol) {
          throw SolverFailure("DenseLdlt: matrix is indefinite (pivot " +
                              std::to_string(f(i, i)) + ")");
        }
        f(i, i) = 0.0;
        for (std::size_t j = k; j < i; ++j) f(i, j) = 0.0;
      }
      rank_ = k;
      break;
    }
    for (std::size_t i = k + 1; i < n_; ++i) {
      const double lik = f(i, k) / d;
      if (lik == 0.0) continue;
      for (std::size_t j = k + 1; j <= i; ++j) f(i, j) -= lik * f(j, k);
    }
    for (std::size_t i = k + 1; i < n_; ++i) f(i, k) /= d;
    // keep the upper triangle consistent for the symmetric swaps above
    for (std::size_t i = k + 1; i < n_; ++i) {
      for (std::size_t j = k + 1; j < i; ++j) f(j, i) = f(i, j);
    }
  }
}

std::vector<double> DenseLdlt::solve(std::span<const double> b) const {
  if (b.size() != n_) throw DimensionMismatch("DenseLdlt::solve: size mismatch");
  std::vector<double> rhs(b.begin(), b.end());
  if (options_.constant_kernel && singular()) remove_mean(rhs);
  std::vector<double> y(n_);
  for (std::size_t i = 0; i < n_; ++i) y[i] = rhs[perm_[i]];
  for (std::size_t i = 0; i < rank_; ++i) {
    for (std::size_t j = 0; j < i; ++j) y[i] -= factor_(i, j) * y[j];
  }
  for (std::size_t i = 0; i < n_; ++i) y[i] = i < rank_ ? y[i] / factor_(i, i) : 0.0;
  for (std::size_t ii = rank_; ii-- > 0;) {
    for (std::size_t j = ii + 1; j < rank_; ++j) y[ii] -= factor_(j, ii) * y[j];
  }
  std::vector<double> x(n_);
  for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = y[i];
  if (options_.constant_kernel && singular()) remove_mean(x);
  return x;
}

std::vector<double> dense_sym_solve(const DenseMatrix& a, std::span<const double> b,
                                    LdltOptions options) {
  return DenseLdlt(a, options).solve(b);
}

PcgResult pcg_jacobi(const CsrMatrix& a, std::span<const double> b, double tol,
                     std::size_t max_iter, bool constant_kernel) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw DimensionMismatch("pcg_jacobi: shape mismatch");
  PcgResult out;
  out.x.assign(n, 0.0);
  std::vector<double> r(b.begin(), b.end());
  if (constant_kernel) remove_mean(r);
  const std::vector<double> d = a.diagonal();
  std::vector<double> inv_d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] <= 0.0) throw SolverFailure("pcg_jacobi: nonpositive diagonal entry");
    inv_d[i] = 1.0 / d[i];
  }
  const double r0 = std::max(norm2(r), 1e-300);
  out.history.push_back(norm2(r) / r0);
  if (norm2(r) == 0.0) {
    out.converged = true;
    return out;
  }
  std::vector<double> z(n), p(n), ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_d[i] * r[i];
  p = z;
  double rz = dot(r, z);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    spmv(a, p, ap);
    const double pap = dot(p, ap);
    if (pap <= 0.0) throw SolverFailure("pcg_jacobi: matrix is not positive definite");
    const double alpha = rz / pap;
    axpy(alpha, p, out.x);
    axpy(-alpha, ap, r);
    const double rel = norm2(r) / r0;
    out.history.push_back(rel);
    out.iterations = it;
    out.relative_residual = rel;
    if (rel <= tol) {
      out.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_d[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (constant_kernel) remove_mean(out.x);
  return out;
}

}  // namespace transolve
