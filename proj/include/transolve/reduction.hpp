#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "transolve/amg.hpp"
#include "transolve/sparse.hpp"

namespace transolve {

// Newton matrix in the generic form (eps I + H0) acting on (xi1, xi2), where
// xi1 has M = n + m entries (column nodes, then row nodes) and xi2 has one
// entry when a total-mass row is present:
//
//   H0 = [ diag(t) + T S T^T   T S 1 ]
//        [ 1^T S T^T           1^T s ]      with S = diag(s).
struct NewtonSystem {
  std::size_t m = 0;
  std::size_t n = 0;
  bool total_mass = false;
  double epsilon = 0.0;
  std::vector<double> s;  // length m*n, vec order of the plan
  std::vector<double> t;  // length n + m

  std::size_t reduced_size() const { return n + m; }
  std::size_t size() const { return n + m + (total_mass ? 1 : 0); }
};

std::vector<double> apply_generic(const NewtonSystem& sys, std::span<const double> x);
DenseMatrix dense_generic(const NewtonSystem& sys);

// A = eps I + diag(t) + A0, where A0 = Q T S T^T Q is the Laplacian of the
// bipartite graph with weights Y (m x n, vec(Y) = s) and Q = diag(I_n, -I_m).
struct ReducedLaplacianSystem {
  std::size_t m = 0;
  std::size_t n = 0;
  double epsilon = 0.0;
  std::vector<double> t;
  CsrMatrix y;                        // m x n nonnegative weights
  std::vector<std::size_t> isolated;  // nodes without edges

  std::size_t size() const { return n + m; }
  // eps + t_i: the row sums of A.
  std::vector<double> excess() const;
  // The assembled M x M matrix A.
  CsrMatrix laplacian() const;
};

ReducedLaplacianSystem assemble_bipartite_laplacian(std::size_t m, std::size_t n,
                                                    std::span<const double> s,
                                                    std::span<const double> t, double epsilon);

// T S T^T + eps I + diag(t) in the original (unsigned) coordinates.
CsrMatrix reduced_matrix(const ReducedLaplacianSystem& sys);

struct SchurPieces {
  double pi_tilde = 0.0;    // eps + 1^T s
  std::vector<double> psi;  // T s: column sums then row sums of Y
};

SchurPieces schur_pieces(const NewtonSystem& sys);

struct ComponentBlock {
  std::vector<std::size_t> nodes;  // sorted; column nodes come first
  std::size_t column_nodes = 0;
};

struct ComponentSplit {
  std::vector<std::size_t> labels;  // component id per node
  std::vector<std::size_t> perm;    // nodes grouped by component
  std::vector<ComponentBlock> blocks;
  std::size_t count() const { return blocks.size(); }
};

ComponentSplit split_components(const ReducedLaplacianSystem& sys);

enum class LinearBackend { Amg, Pcg };

struct HybridPolicy {
  // Components up to this size use a dense factorization; 0 selects
  // max(64, ceil(M^(1/3))).
  std::size_t direct_threshold = 0;
  LinearBackend backend = LinearBackend::Amg;
  double tol = 1e-11;
  std::size_t max_iter = 200;
  std::size_t pcg_max_iter = 100000;
  // Largest component that may fall back to the dense path when the
  // iterative solver does not converge.
  std::size_t dense_fallback_max = 3000;
  AmgConfig amg = default_amg();

  static AmgConfig default_amg() {
    AmgConfig c;
    c.smoother_fine = SmootherKind::GaussSeidel;
    c.interpolation = InterpolationKind::BipartiteShortcutThenStandard;
    return c;
  }
};

std::size_t effective_direct_threshold(const HybridPolicy& policy, std::size_t total_size);

struct LinearSolveStats {
  std::size_t max_iterations = 0;  // largest iterative count of a single component solve
  std::size_t iterative_solves = 0;
  std::size_t total_iterations = 0;
  std::size_t components = 0;
  std::size_t fallbacks = 0;
};

// Prepared solver for A u = f over all components; factorizations and AMG
// hierarchies are built once and reused across right-hand sides.
class LaplacianSolver {
 public:
  LaplacianSolver(const ReducedLaplacianSystem& sys, const HybridPolicy& policy);
  ~LaplacianSolver();
  LaplacianSolver(LaplacianSolver&&) noexcept;
  LaplacianSolver& operator=(LaplacianSolver&&) noexcept;

  std::vector<double> solve(std::span<const double> f, LinearSolveStats* stats = nullptr) const;
  const ComponentSplit& split() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Solves (eps I + diag(t) + T S T^T) xi = z through the Laplacian form.
std::vector<double> solve_reduced(const ReducedLaplacianSystem& sys, const LaplacianSolver& solver,
                                  std::span<const double> z, LinearSolveStats* stats = nullptr);

struct LinearSolveOutcome {
  std::vector<double> solution;
  LinearSolveStats stats;
};

// Full generic system. A total-mass row is eliminated through its scalar
// complement, which costs two Laplacian solves.
LinearSolveOutcome hybrid_solve(const NewtonSystem& sys, std::span<const double> z,
                                const HybridPolicy& policy);

}  // namespace transolve
