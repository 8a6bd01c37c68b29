#include "transolve/amg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "transolve/error.hpp"
#include "transolve/vector_ops.hpp"

namespace transolve {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// 1^T A 1 below this fraction of trace(A) is treated as an exact kernel.
constexpr double kKernelRelTol = 1e-13;

}  // namespace

std::vector<double> row_min_offdiag(const CsrMatrix& a) {
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    bool any = false;
    double mn = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] == i || vals[k] == 0.0) continue;
      mn = any ? std::min(mn, vals[k]) : vals[k];
      any = true;
    }
    out[i] = any ? mn : 0.0;
  }
  return out;
}

double strength_of_connection(const CsrMatrix& a, std::size_t i, std::size_t j,
                              std::span<const double> row_min) {
  if (i == j) return 0.0;
  const double aij = a.at(i, j);
  if (aij == 0.0) return 0.0;
  const double denom = std::max(row_min[i], row_min[j]);
  if (!(denom < 0.0)) return 0.0;
  return aij / denom;
}

double strength_of_connection(const CsrMatrix& a, std::size_t i, std::size_t j) {
  const std::vector<double> mins = row_min_offdiag(a);
  return strength_of_connection(a, i, j, mins);
}

CfSplit split_from_mask(std::vector<char> is_coarse) {
  CfSplit split;
  split.is_coarse = std::move(is_coarse);
  for (std::size_t i = 0; i < split.is_coarse.size(); ++i) {
    (split.is_coarse[i] ? split.coarse : split.fine).push_back(i);
  }
  return split;
}

CfSplit cf_split(const CsrMatrix& a, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("cf_split: delta must lie in (0, 1)");
  const std::size_t n = a.rows();
  const std::vector<double> mins = row_min_offdiag(a);
  auto strong = [&](std::size_t i, std::size_t k) {
    const std::size_t j = a.row_cols(i)[k];
    if (j == i) return false;
    const double aij = a.row_values(i)[k];
    const double denom = std::max(mins[i], mins[j]);
    return aij != 0.0 && denom < 0.0 && aij / denom > delta;
  };

  std::vector<char> visited(n, 0), coarse(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (visited[i]) continue;
    coarse[i] = 1;
    visited[i] = 1;
    for (std::size_t k = 0; k < a.row_cols(i).size(); ++k) {
      if (strong(i, k)) visited[a.row_cols(i)[k]] = 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (coarse[i]) continue;
    bool has_coarse = false;
    for (std::size_t k = 0; k < a.row_cols(i).size() && !has_coarse; ++k) {
      has_coarse = strong(i, k) && coarse[a.row_cols(i)[k]];
    }
    if (!has_coarse) coarse[i] = 1;
  }
  return split_from_mask(std::move(coarse));
}

namespace {

// Interpolation weights of one fine row, keyed by global node index.
using SparseRow = std::vector<std::pair<std::size_t, double>>;

bool ff_block_is_diagonal(const CsrMatrix& a, const CfSplit& split) {
  for (std::size_t i : split.fine) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] != i && vals[k] != 0.0 && !split.is_coarse[cols[k]]) return false;
    }
  }
  return true;
}

// -D_FF^{-1} A_FC for one fine row.
SparseRow jacobi_row(const CsrMatrix& a, const CfSplit& split, std::size_t i) {
  SparseRow row;
  const double d = a.at(i, i);
  const auto cols = a.row_cols(i);
  const auto vals = a.row_values(i);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] != i && split.is_coarse[cols[k]] && vals[k] != 0.0) {
      row.emplace_back(cols[k], -vals[k] / d);
    }
  }
  return row;
}

// Diagonal approximation of A_FF in the ideal weights: W = -D_FF^{-1} A_FC.
std::vector<SparseRow> standard_rows(const CsrMatrix& a, const CfSplit& split) {
  std::vector<SparseRow> rows(a.rows());
  for (std::size_t i : split.fine) rows[i] = jacobi_row(a, split, i);
  return rows;
}

std::vector<SparseRow> ideal_rows(const CsrMatrix& a, const CfSplit& split,
                                  std::size_t dense_max) {
  const std::size_t n = a.rows();
  std::vector<SparseRow> rows(n);
  if (ff_block_is_diagonal(a, split)) {
    for (std::size_t i : split.fine) rows[i] = jacobi_row(a, split, i);
    return rows;
  }
  const std::size_t nf = split.fine.size();
  if (nf > dense_max) {
    throw SolverFailure("ideal interpolation: fine block too large for a dense solve");
  }
  std::vector<std::size_t> fine_pos(n, kNone);
  for (std::size_t k = 0; k < nf; ++k) fine_pos[split.fine[k]] = k;
  DenseMatrix aff(nf, nf);
  for (std::size_t k = 0; k < nf; ++k) {
    const std::size_t i = split.fine[k];
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t q = 0; q < cols.size(); ++q) {
      if (fine_pos[cols[q]] != kNone) aff(k, fine_pos[cols[q]]) = vals[q];
    }
  }
  const DenseLdlt factor(std::move(aff));
  if (factor.singular()) throw SolverFailure("ideal interpolation: A_FF is singular");

  // Columns of A_FC, gathered through the symmetric structure.
  std::vector<double> rhs(nf);
  std::vector<std::vector<std::pair<std::size_t, double>>> dense_rows(nf);
  for (std::size_t c : split.coarse) {
    std::fill(rhs.begin(), rhs.end(), 0.0);
    bool any = false;
    const auto cols = a.row_cols(c);
    const auto vals = a.row_values(c);
    for (std::size_t q = 0; q < cols.size(); ++q) {
      if (fine_pos[cols[q]] != kNone && vals[q] != 0.0) {
        rhs[fine_pos[cols[q]]] = -vals[q];
        any = true;
      }
    }
    if (!any) continue;
    const std::vector<double> w = factor.solve(rhs);
    for (std::size_t k = 0; k < nf; ++k) {
      if (w[k] != 0.0) dense_rows[k].emplace_back(c, w[k]);
    }
  }
  for (std::size_t k = 0; k < nf; ++k) {
    SparseRow& row = dense_rows[k];
    double big = 0.0;
    for (const auto& e : row) big = std::max(big, std::abs(e.second));
    for (const auto& e : row) {
      if (std::abs(e.second) > 1e-14 * big) rows[split.fine[k]].push_back(e);
    }
  }
  return rows;
}

}  // namespace

CsrMatrix build_interpolation(const CsrMatrix& a, CfSplit& split, InterpolationKind kind,
                              std::size_t ideal_dense_max) {
  const std::size_t n = a.rows();
  if (split.is_coarse.size() != n) throw DimensionMismatch("build_interpolation: split size");
  for (;;) {
    const std::vector<SparseRow> rows = kind == InterpolationKind::Ideal
                                            ? ideal_rows(a, split, ideal_dense_max)
                                            : standard_rows(a, split);
    std::vector<std::size_t> promote;
    for (std::size_t i : split.fine) {
      double s = 0.0;
      for (const auto& e : rows[i]) s += e.second;
      if (!(s > 0.0)) promote.push_back(i);
    }
    if (!promote.empty()) {
      std::vector<char> mask = split.is_coarse;
      for (std::size_t i : promote) mask[i] = 1;
      split = split_from_mask(std::move(mask));
      continue;
    }
    std::vector<std::size_t> coarse_index(n, kNone);
    for (std::size_t k = 0; k < split.coarse.size(); ++k) coarse_index[split.coarse[k]] = k;
    std::vector<std::size_t> row_ptr(n + 1, 0);
    std::vector<std::size_t> col_idx;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
      if (split.is_coarse[i]) {
        col_idx.push_back(coarse_index[i]);
        values.push_back(1.0);
      } else {
        double s = 0.0;
        for (const auto& e : rows[i]) s += e.second;
        for (const auto& e : rows[i]) {
          col_idx.push_back(coarse_index[e.first]);
          values.push_back(e.second / s);
        }
      }
      row_ptr[i + 1] = col_idx.size();
    }
    // coarse indices follow the node order, so each row is already sorted
    return CsrMatrix(n, split.coarse.size(), std::move(row_ptr), std::move(col_idx),
                     std::move(values));
  }
}

CsrMatrix galerkin_coarse(const CsrMatrix& a, const CsrMatrix& p) {
  return symmetrize(triple_product(p, a));
}

namespace {

AmgLevel make_level(CsrMatrix a, SmootherKind smoother, std::vector<double> a_one) {
  AmgLevel level;
  level.diag = a.diagonal();
  for (double d : level.diag) {
    if (!(d > 0.0)) throw InvalidInput("amg: matrix diagonal must be positive");
  }
  level.a = std::move(a);
  level.smoother = smoother;
  level.a_one = std::move(a_one);
  level.eta = sum(level.a_one);
  return level;
}

// Strict halves of a bipartite node set; the larger side becomes fine.
bool bipartite_split_mask(const CsrMatrix& a, std::size_t split_at, std::vector<char>& mask) {
  const std::size_t n = a.rows();
  if (split_at == 0 || split_at >= n) return false;
  const bool leading_fine = split_at >= n - split_at;
  mask.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool leading = i < split_at;
    mask[i] = leading == leading_fine ? 0 : 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool side = i < split_at;
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] != i && vals[k] != 0.0 && (cols[k] < split_at) == side) return false;
    }
  }
  return true;
}

}  // namespace

AmgHierarchy setup_hierarchy(const CsrMatrix& a, const AmgConfig& config) {
  return setup_hierarchy(a, config, spmv(a, std::vector<double>(a.rows(), 1.0)));
}

AmgHierarchy setup_hierarchy(const CsrMatrix& a, const AmgConfig& config,
                             std::span<const double> a_one) {
  if (a.rows() != a.cols()) throw DimensionMismatch("amg: matrix must be square");
  if (a_one.size() != a.rows()) throw DimensionMismatch("amg: kernel image length");
  if (config.theta < 1) throw InvalidInput("amg: theta must be at least 1");
  if (!(config.omega > 0.0 && config.omega <= 1.0)) throw InvalidInput("amg: omega out of range");
  AmgHierarchy h;
  h.config = config;
  h.levels.push_back(
      make_level(a, config.smoother_fine, std::vector<double>(a_one.begin(), a_one.end())));

  double trace = 0.0;
  for (double d : h.levels.front().diag) trace += std::abs(d);
  const bool singular = h.levels.front().eta <= kKernelRelTol * trace;
  h.levels.front().kernel_singular = singular;

  while (h.levels.size() < std::max<std::size_t>(config.max_levels, 1) &&
         h.levels.back().a.rows() > config.coarsest_max) {
    const CsrMatrix& fine = h.levels.back().a;
    const std::size_t n = fine.rows();
    CfSplit split;
    InterpolationKind kind =
        config.interpolation == InterpolationKind::Ideal ? InterpolationKind::Ideal
                                                         : InterpolationKind::Standard;
    std::vector<char> mask;
    if (h.levels.size() == 1 &&
        config.interpolation == InterpolationKind::BipartiteShortcutThenStandard &&
        bipartite_split_mask(fine, config.bipartite_split, mask)) {
      split = split_from_mask(std::move(mask));
      kind = InterpolationKind::Ideal;
    } else {
      split = cf_split(fine, config.strength_delta);
    }
    CsrMatrix p = build_interpolation(fine, split, kind, config.ideal_dense_max);
    const std::size_t nc = p.cols();
    if (nc == 0 || static_cast<double>(nc) > config.stall_ratio * static_cast<double>(n)) break;
    CsrMatrix coarse = galerkin_coarse(fine, p);
    std::vector<double> a_one = transpose_spmv(p, h.levels.back().a_one);
    AmgLevel& cur = h.levels.back();
    cur.pt = p.transpose();
    cur.p = std::move(p);
    h.levels.push_back(make_level(std::move(coarse), config.smoother_coarse, std::move(a_one)));
    h.levels.back().kernel_singular = singular;
  }

  const AmgLevel& last = h.levels.back();
  if (last.a.rows() <= config.direct_coarse_max) {
    LdltOptions opts;
    opts.constant_kernel = true;
    h.coarse_factor = std::make_shared<const DenseLdlt>(to_dense(last.a), opts);
  }
  return h;
}

void smooth(const AmgLevel& level, double omega, std::span<double> e,
            std::span<const double> rhs, bool transpose, std::uint64_t* work) {
  const CsrMatrix& a = level.a;
  const std::size_t n = a.rows();
  std::vector<double> r = residual(a, e, rhs);
  if (work) *work += a.nnz();

  const bool kernel = !level.kernel_singular && level.eta > 0.0;
  double s = 0.0;
  if (kernel) {
    // 1^T r = 1^T rhs - (A 1)^T e by symmetry, free of cancellation in A e
    s = sum(rhs) - dot(level.a_one, e);
    if (!transpose) axpy(-s / level.eta, level.a_one, r);
  }

  std::vector<double> y(n);
  if (level.smoother == SmootherKind::WeightedJacobi) {
    for (std::size_t i = 0; i < n; ++i) y[i] = omega * r[i] / level.diag[i];
    if (work) *work += n;
  } else {
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    const auto va = a.values();
    if (!transpose) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = r[i];
        for (std::size_t k = rp[i]; k < rp[i + 1] && ci[k] < i; ++k) acc -= va[k] * y[ci[k]];
        y[i] = acc / level.diag[i];
      }
    } else {
      for (std::size_t i = n; i-- > 0;) {
        double acc = r[i];
        for (std::size_t k = rp[i + 1]; k-- > rp[i] && ci[k] > i;) acc -= va[k] * y[ci[k]];
        y[i] = acc / level.diag[i];
      }
    }
    if (work) *work += a.nnz() / 2 + n;
  }

  if (kernel) {
    const double shift = transpose ? (s - dot(level.a_one, y)) / level.eta : s / level.eta;
    for (std::size_t i = 0; i < n; ++i) e[i] += y[i] + shift;
    if (work) *work += 2 * n;
  } else {
    for (std::size_t i = 0; i < n; ++i) e[i] += y[i];
  }
}

std::vector<double> w_cycle(const AmgHierarchy& h, std::span<const double> zeta,
                            std::span<const double> e, std::size_t level,
                            std::uint64_t* work) {
  const AmgLevel& lv = h.levels.at(level);
  std::vector<double> g(e.begin(), e.end());
  const bool coarsest = level + 1 == h.levels.size();
  if (coarsest) {
    if (h.coarse_factor) {
      const std::vector<double> r = residual(lv.a, g, zeta);
      const std::vector<double> c = h.coarse_factor->solve(r);
      axpy(1.0, c, g);
      if (work) *work += lv.a.nnz() + lv.a.rows() * lv.a.rows();
    } else {
      smooth(lv, h.config.omega, g, zeta, false, work);
    }
    return g;
  }
  for (int i = 0; i < h.config.theta; ++i) smooth(lv, h.config.omega, g, zeta, false, work);
  const std::vector<double> r = residual(lv.a, g, zeta);
  const std::vector<double> zc = spmv(lv.pt, r);
  if (work) *work += lv.a.nnz() + lv.pt.nnz();
  const std::size_t nc = lv.p.cols();
  std::vector<double> ec = w_cycle(h, zc, std::vector<double>(nc, 0.0), level + 1, work);
  // a second visit to an exactly solved coarsest level returns the same vector
  const bool next_direct = level + 2 == h.levels.size() && h.coarse_factor;
  if (!next_direct) ec = w_cycle(h, zc, ec, level + 1, work);
  const std::vector<double> pe = spmv(lv.p, ec);
  axpy(1.0, pe, g);
  if (work) *work += lv.p.nnz();
  for (int i = 0; i < h.config.theta; ++i) smooth(lv, h.config.omega, g, zeta, true, work);
  return g;
}

AmgSolveResult amg_solve(const AmgHierarchy& h, std::span<const double> f, double tol,
                         std::size_t max_iter) {
  const CsrMatrix& a = h.levels.front().a;
  if (f.size() != a.rows()) throw DimensionMismatch("amg_solve: rhs length");
  AmgSolveResult out;
  std::vector<double> rhs(f.begin(), f.end());
  const bool singular = h.singular();
  if (singular) remove_mean(rhs);
  out.x.assign(a.rows(), 0.0);
  const double fnorm = norm2(rhs);
  out.history.push_back(fnorm > 0.0 ? 1.0 : 0.0);
  if (fnorm == 0.0) {
    out.converged = true;
    return out;
  }
  std::vector<double> r = rhs;
  const std::vector<double> zero(a.rows(), 0.0);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const std::vector<double> c = w_cycle(h, r, zero, 0, &out.work);
    axpy(1.0, c, out.x);
    if (singular) remove_mean(out.x);
    r = residual(a, out.x, rhs);
    const double rel = norm2(r) / fnorm;
    out.history.push_back(rel);
    out.iterations = it;
    out.relative_residual = rel;
    if (rel <= tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

AmgSolveResult amg_solve(const CsrMatrix& a, std::span<const double> f,
                         const AmgConfig& config, double tol, std::size_t max_iter) {
  return amg_solve(setup_hierarchy(a, config), f, tol, max_iter);
}

double operator_complexity(const AmgHierarchy& h) {
  if (h.levels.empty() || h.levels.front().a.nnz() == 0) return 1.0;
  double total = 0.0;
  for (const AmgLevel& lv : h.levels) total += static_cast<double>(lv.a.nnz());
  return total / static_cast<double>(h.levels.front().a.nnz());
}

std::vector<LevelInfo> hierarchy_summary(const AmgHierarchy& h) {
  std::vector<LevelInfo> out;
  for (std::size_t l = 0; l < h.levels.size(); ++l) {
    out.push_back({l + 1, h.levels[l].a.rows(), h.levels[l].a.nnz()});
  }
  return out;
}

double contraction_factor_estimate(const AmgHierarchy& h, int trials, int iterations,
                                   std::uint64_t seed) {
  const CsrMatrix& a = h.levels.front().a;
  const std::size_t n = a.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::vector<double> zero(n, 0.0);
  auto a_norm = [&](std::span<const double> v) {
    return std::sqrt(std::max(dot(v, spmv(a, v)), 0.0));
  };
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> e(n);
    for (double& v : e) v = normal(rng);
    remove_mean(e);
    double nrm = a_norm(e);
    if (nrm == 0.0) continue;
    for (double& v : e) v /= nrm;
    double rho = 0.0;
    for (int it = 0; it < iterations; ++it) {
      std::vector<double> next = w_cycle(h, zero, e);
      if (h.singular()) remove_mean(next);
      nrm = a_norm(next);
      rho = nrm;
      if (nrm == 0.0) break;
      for (double& v : next) v /= nrm;
      e = std::move(next);
    }
    worst = std::max(worst, rho);
  }
  return worst;
}

}  // namespace transolve
