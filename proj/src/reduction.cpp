#include "transolve/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "transolve/error.hpp"
#include "transolve/vector_ops.hpp"

namespace transolve {

namespace {

void check_system(const NewtonSystem& sys) {
  if (sys.s.size() != sys.m * sys.n || sys.t.size() != sys.n + sys.m) {
    throw DimensionMismatch("newton system: s must have m*n and t n+m entries");
  }
}

}  // namespace

std::vector<double> apply_generic(const NewtonSystem& sys, std::span<const double> x) {
  check_system(sys);
  const std::size_t m = sys.m, n = sys.n, big_m = n + m;
  if (x.size() != sys.size()) throw DimensionMismatch("apply_generic: vector length");
  const double x2 = sys.total_mass ? x[big_m] : 0.0;
  std::vector<double> out(sys.size(), 0.0);
  double mass = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const double s = sys.s[i + j * m];
      if (s == 0.0) continue;
      // (T^T x1 + 1 x2) at plan entry (i, j), weighted by s
      const double v = s * (x[j] + x[n + i] + x2);
      out[j] += v;
      out[n + i] += v;
      mass += v;
    }
  }
  for (std::size_t k = 0; k < big_m; ++k) out[k] += (sys.epsilon + sys.t[k]) * x[k];
  if (sys.total_mass) out[big_m] = mass + sys.epsilon * x2;
  return out;
}

DenseMatrix dense_generic(const NewtonSystem& sys) {
  const std::size_t size = sys.size();
  DenseMatrix d(size, size);
  std::vector<double> e(size, 0.0);
  for (std::size_t k = 0; k < size; ++k) {
    e[k] = 1.0;
    const std::vector<double> col = apply_generic(sys, e);
    for (std::size_t i = 0; i < size; ++i) d(i, k) = col[i];
    e[k] = 0.0;
  }
  return d;
}

std::vector<double> ReducedLaplacianSystem::excess() const {
  std::vector<double> d(size());
  for (std::size_t k = 0; k < size(); ++k) d[k] = epsilon + t[k];
  return d;
}

CsrMatrix ReducedLaplacianSystem::laplacian() const {
  const std::size_t big_m = size();
  std::vector<Triplet> trips;
  trips.reserve(2 * y.nnz() + big_m);
  std::vector<double> degree(big_m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto cols = y.row_cols(i);
    const auto vals = y.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::size_t j = cols[k];
      trips.push_back({j, n + i, -vals[k]});
      trips.push_back({n + i, j, -vals[k]});
      degree[j] += vals[k];
      degree[n + i] += vals[k];
    }
  }
  for (std::size_t k = 0; k < big_m; ++k) {
    trips.push_back({k, k, degree[k] + epsilon + t[k]});
  }
  return CsrMatrix::from_triplets(big_m, big_m, std::move(trips));
}

ReducedLaplacianSystem assemble_bipartite_laplacian(std::size_t m, std::size_t n,
                                                    std::span<const double> s,
                                                    std::span<const double> t, double epsilon) {
  if (s.size() != m * n || t.size() != n + m) {
    throw DimensionMismatch("assemble_bipartite_laplacian: s must have m*n and t n+m entries");
  }
  if (!(epsilon >= 0.0)) throw InvalidInput("assemble_bipartite_laplacian: negative epsilon");
  ReducedLaplacianSystem sys;
  sys.m = m;
  sys.n = n;
  sys.epsilon = epsilon;
  sys.t.assign(t.begin(), t.end());
  for (double v : t) {
    if (!(v >= 0.0)) throw InvalidInput("assemble_bipartite_laplacian: negative t entry");
  }
  std::vector<Triplet> trips;
  std::vector<char> touched(n + m, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const double v = s[i + j * m];
      if (!(v >= 0.0)) throw InvalidInput("assemble_bipartite_laplacian: negative s entry");
      if (v > 0.0) {
        trips.push_back({i, j, v});
        touched[j] = 1;
        touched[n + i] = 1;
      }
    }
  }
  sys.y = CsrMatrix::from_triplets(m, n, std::move(trips));
  for (std::size_t k = 0; k < n + m; ++k) {
    if (!touched[k]) sys.isolated.push_back(k);
  }
  return sys;
}

CsrMatrix reduced_matrix(const ReducedLaplacianSystem& sys) {
  const CsrMatrix a = sys.laplacian();
  std::vector<Triplet> trips;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const bool flip = (i < sys.n) != (cols[k] < sys.n);
      trips.push_back({i, cols[k], flip ? -vals[k] : vals[k]});
    }
  }
  return CsrMatrix::from_triplets(a.rows(), a.cols(), std::move(trips));
}

SchurPieces schur_pieces(const NewtonSystem& sys) {
  check_system(sys);
  SchurPieces out;
  out.psi.assign(sys.n + sys.m, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < sys.n; ++j) {
    for (std::size_t i = 0; i < sys.m; ++i) {
      const double v = sys.s[i + j * sys.m];
      out.psi[j] += v;
      out.psi[sys.n + i] += v;
      total += v;
    }
  }
  out.pi_tilde = sys.epsilon + total;
  return out;
}

ComponentSplit split_components(const ReducedLaplacianSystem& sys) {
  const std::size_t n = sys.n, big_m = sys.size();
  const CsrMatrix yt = sys.y.transpose();  // n x m
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  ComponentSplit out;
  out.labels.assign(big_m, unset);
  std::deque<std::size_t> queue;
  for (std::size_t root = 0; root < big_m; ++root) {
    if (out.labels[root] != unset) continue;
    const std::size_t id = out.blocks.size();
    ComponentBlock block;
    out.labels[root] = id;
    queue.push_back(root);
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      block.nodes.push_back(v);
      // column node j is adjacent to row nodes n+i with Y(i, j) > 0 and vice versa
      const auto nbrs = v < n ? yt.row_cols(v) : sys.y.row_cols(v - n);
      const std::size_t offset = v < n ? n : 0;
      for (std::size_t w : nbrs) {
        const std::size_t u = w + offset;
        if (out.labels[u] == unset) {
          out.labels[u] = id;
          queue.push_back(u);
        }
      }
    }
    std::sort(block.nodes.begin(), block.nodes.end());
    block.column_nodes = static_cast<std::size_t>(
        std::lower_bound(block.nodes.begin(), block.nodes.end(), n) - block.nodes.begin());
    out.blocks.push_back(std::move(block));
  }
  out.perm.reserve(big_m);
  for (const ComponentBlock& b : out.blocks) {
    out.perm.insert(out.perm.end(), b.nodes.begin(), b.nodes.end());
  }
  return out;
}

std::size_t effective_direct_threshold(const HybridPolicy& policy, std::size_t total_size) {
  if (policy.direct_threshold > 0) return policy.direct_threshold;
  const auto cube = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(total_size))));
  return std::max<std::size_t>(64, cube);
}

namespace {

enum class ComponentKind { Scalar, Dense, Iterative };

struct ComponentSolver {
  ComponentKind kind = ComponentKind::Scalar;
  std::vector<std::size_t> nodes;
  std::vector<double> excess;  // row sums of the block
  double excess_total = 0.0;
  CsrMatrix a;
  std::shared_ptr<const DenseLdlt> ldlt;
  std::shared_ptr<const AmgHierarchy> amg;
};

std::shared_ptr<const DenseLdlt> dense_factor(const CsrMatrix& a) {
  LdltOptions opts;
  opts.constant_kernel = true;
  return std::make_shared<const DenseLdlt>(to_dense(a), opts);
}

}  // namespace

struct LaplacianSolver::Impl {
  ComponentSplit split;
  std::vector<ComponentSolver> components;
  HybridPolicy policy;
};

LaplacianSolver::LaplacianSolver(const ReducedLaplacianSystem& sys, const HybridPolicy& policy)
    : impl_(std::make_unique<Impl>()) {
  impl_->policy = policy;
  impl_->split = split_components(sys);
  const std::size_t threshold = effective_direct_threshold(policy, sys.size());
  const std::vector<double> excess = sys.excess();
  const CsrMatrix full = sys.laplacian();
  for (const ComponentBlock& block : impl_->split.blocks) {
    ComponentSolver c;
    c.nodes = block.nodes;
    for (std::size_t v : block.nodes) c.excess.push_back(excess[v]);
    c.excess_total = sum(c.excess);
    if (block.nodes.size() == 1) {
      c.kind = ComponentKind::Scalar;
    } else {
      c.a = principal_submatrix(full, block.nodes);
      if (block.nodes.size() <= threshold) {
        c.kind = ComponentKind::Dense;
        c.ldlt = dense_factor(c.a);
      } else {
        c.kind = ComponentKind::Iterative;
        if (policy.backend == LinearBackend::Amg) {
          AmgConfig cfg = policy.amg;
          cfg.bipartite_split = block.column_nodes;
          c.amg = std::make_shared<const AmgHierarchy>(setup_hierarchy(c.a, cfg, c.excess));
        }
      }
    }
    impl_->components.push_back(std::move(c));
  }
}

LaplacianSolver::~LaplacianSolver() = default;
LaplacianSolver::LaplacianSolver(LaplacianSolver&&) noexcept = default;
LaplacianSolver& LaplacianSolver::operator=(LaplacianSolver&&) noexcept = default;

const ComponentSplit& LaplacianSolver::split() const { return impl_->split; }

std::vector<double> LaplacianSolver::solve(std::span<const double> f,
                                           LinearSolveStats* stats) const {
  const HybridPolicy& policy = impl_->policy;
  std::vector<double> u(f.size(), 0.0);
  if (f.size() != impl_->split.labels.size()) {
    throw DimensionMismatch("LaplacianSolver::solve: rhs length");
  }
  for (const ComponentSolver& c : impl_->components) {
    const std::size_t size = c.nodes.size();
    if (stats) ++stats->components;
    std::vector<double> local(size);
    for (std::size_t k = 0; k < size; ++k) local[k] = f[c.nodes[k]];

    if (c.excess_total <= 0.0) {
      // pure Laplacian block (no shift): solvable only for mean-zero data
      if (size == 1) {
        if (local[0] != 0.0) throw SolverFailure("singular scalar block with nonzero data");
        continue;
      }
    }
    // A 1 = excess, so the mean of the data is carried by a constant shift:
    // u = c 1 + v with A v = f - c * excess and excess^T v = 0.
    const double shift = c.excess_total > 0.0 ? sum(local) / c.excess_total : 0.0;
    for (std::size_t k = 0; k < size; ++k) local[k] -= shift * c.excess[k];

    std::vector<double> v;
    if (c.kind == ComponentKind::Scalar) {
      v.assign(1, 0.0);
    } else if (c.kind == ComponentKind::Dense) {
      v = c.ldlt->solve(local);
    } else {
      bool converged = false;
      std::size_t iterations = 0;
      double rel = 0.0;
      if (c.amg) {
        AmgSolveResult r = amg_solve(*c.amg, local, policy.tol, policy.max_iter);
        converged = r.converged;
        iterations = r.iterations;
        rel = r.relative_residual;
        v = std::move(r.x);
      } else {
        PcgResult r = pcg_jacobi(c.a, local, policy.tol, policy.pcg_max_iter,
                                 c.excess_total <= 0.0);
        converged = r.converged;
        iterations = r.iterations;
        rel = r.relative_residual;
        v = std::move(r.x);
      }
      if (stats) {
        ++stats->iterative_solves;
        stats->total_iterations += iterations;
        stats->max_iterations = std::max(stats->max_iterations, iterations);
      }
      if (!converged) {
        if (size > policy.dense_fallback_max) {
          throw SolverFailure("iterative solve did not converge on a component of size " +
                              std::to_string(size) + " (relative residual " +
                              std::to_string(rel) + ")");
        }
        v = dense_factor(c.a)->solve(local);
        if (stats) ++stats->fallbacks;
      }
    }
    if (c.excess_total > 0.0) {
      const double drift = dot(c.excess, v) / c.excess_total;
      for (double& x : v) x -= drift;
    }
    for (std::size_t k = 0; k < size; ++k) u[c.nodes[k]] = v[k] + shift;
  }
  return u;
}

std::vector<double> solve_reduced(const ReducedLaplacianSystem& sys, const LaplacianSolver& solver,
                                  std::span<const double> z, LinearSolveStats* stats) {
  const std::size_t n = sys.n;
  std::vector<double> f(z.begin(), z.end());
  for (std::size_t k = n; k < f.size(); ++k) f[k] = -f[k];
  std::vector<double> u = solver.solve(f, stats);
  for (std::size_t k = n; k < u.size(); ++k) u[k] = -u[k];
  return u;
}

LinearSolveOutcome hybrid_solve(const NewtonSystem& sys, std::span<const double> z,
                                const HybridPolicy& policy) {
  check_system(sys);
  if (z.size() != sys.size()) throw DimensionMismatch("hybrid_solve: rhs length");
  const std::size_t big_m = sys.reduced_size();
  const ReducedLaplacianSystem reduced =
      assemble_bipartite_laplacian(sys.m, sys.n, sys.s, sys.t, sys.epsilon);
  const LaplacianSolver solver(reduced, policy);
  LinearSolveOutcome out;
  if (!sys.total_mass) {
    out.solution = solve_reduced(reduced, solver, z, &out.stats);
    return out;
  }
  // Eliminate the mass entry. With v = (1_n, 0_m), T^T v = 1 gives
  // psi = T S 1 = (A - diag(eps + t)) v in unsigned coordinates, so
  // A^{-1} psi = v - A^{-1} g with g = (eps + t) o v, and the scalar
  // complement pi_tilde - psi^T A^{-1} psi = eps + v^T g - g^T A^{-1} g
  // is formed without cancelling the O(1^T s) terms.
  const std::size_t n = sys.n;
  std::vector<double> g(big_m, 0.0);
  for (std::size_t j = 0; j < n; ++j) g[j] = sys.epsilon + sys.t[j];
  const std::vector<double> ag = solve_reduced(reduced, solver, g, &out.stats);
  std::vector<double> a_inv_psi(big_m);
  for (std::size_t k = 0; k < big_m; ++k) a_inv_psi[k] = (k < n ? 1.0 : 0.0) - ag[k];
  // The system is eps I plus a semidefinite matrix, so the exact complement is
  // at least eps; smaller computed values are roundoff.
  const double computed = sys.epsilon + sum(std::span<const double>(g).first(n)) - dot(g, ag);
  if (!std::isfinite(computed)) throw SolverFailure("hybrid_solve: mass-row complement is not finite");
  const double complement = std::max(computed, sys.epsilon);
  const std::span<const double> z1 = z.first(big_m);
  const std::vector<double> p0 = solve_reduced(reduced, solver, z1, &out.stats);
  const double xi2 = (z[big_m] - dot(a_inv_psi, z1)) / complement;
  out.solution = p0;
  axpy(-xi2, a_inv_psi, out.solution);
  out.solution.push_back(xi2);
  return out;
}

}  // namespace transolve
