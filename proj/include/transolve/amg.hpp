#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "transolve/sparse.hpp"

namespace transolve {

enum class SmootherKind { GaussSeidel, WeightedJacobi };

enum class InterpolationKind {
  Ideal,
  Standard,
  // Level 1 splits along the two sides of a bipartite graph (both sides have
  // diagonal principal blocks, so ideal interpolation is a diagonal scaling);
  // later levels use Standard.
  BipartiteShortcutThenStandard,
};

struct AmgConfig {
  int theta = 5;
  double omega = 0.5;
  double strength_delta = 0.25;
  // Coarsening stops once a level has at most this many nodes.
  std::size_t coarsest_max = 64;
  std::size_t max_levels = 25;
  // The coarsest level is factorized when it has at most this many nodes;
  // otherwise it is smoothed once per visit.
  std::size_t direct_coarse_max = 512;
  double stall_ratio = 0.9;
  SmootherKind smoother_fine = SmootherKind::WeightedJacobi;
  SmootherKind smoother_coarse = SmootherKind::WeightedJacobi;
  InterpolationKind interpolation = InterpolationKind::Standard;
  // Number of leading nodes forming one side of a bipartite graph; only read
  // by BipartiteShortcutThenStandard.
  std::size_t bipartite_split = 0;
  // Ideal interpolation with a non-diagonal A_FF falls back to a dense
  // factorization, allowed up to this many fine nodes.
  std::size_t ideal_dense_max = 4000;
};

struct CfSplit {
  std::vector<char> is_coarse;
  std::vector<std::size_t> coarse;
  std::vector<std::size_t> fine;
};

// Smallest off-diagonal entry of each row (0 for rows without neighbors).
std::vector<double> row_min_offdiag(const CsrMatrix& a);

// A_ij / max(min_k A_ik, min_k A_jk) over off-diagonal neighbors.
double strength_of_connection(const CsrMatrix& a, std::size_t i, std::size_t j);
double strength_of_connection(const CsrMatrix& a, std::size_t i, std::size_t j,
                              std::span<const double> row_min);

// Greedy maximal independent set over strong connections in natural order,
// followed by promotion of fine nodes without a coarse strong neighbor.
CfSplit cf_split(const CsrMatrix& a, double delta);
CfSplit split_from_mask(std::vector<char> is_coarse);

// Prolongation P (N x N_c) with P * 1 = 1. Fine nodes whose interpolation
// row would vanish are promoted to coarse and the split is updated.
CsrMatrix build_interpolation(const CsrMatrix& a, CfSplit& split, InterpolationKind kind,
                              std::size_t ideal_dense_max = 4000);

// symmetrize(P^T A P)
CsrMatrix galerkin_coarse(const CsrMatrix& a, const CsrMatrix& p);

struct AmgLevel {
  CsrMatrix a;
  CsrMatrix p;   // prolongation from the next level; empty on the coarsest
  CsrMatrix pt;  // cached transpose of p
  SmootherKind smoother = SmootherKind::WeightedJacobi;
  std::vector<double> diag;
  std::vector<double> a_one;  // A * 1
  double eta = 0.0;           // 1^T A 1
  bool kernel_singular = false;
};

struct AmgHierarchy {
  std::vector<AmgLevel> levels;
  AmgConfig config;
  std::shared_ptr<const DenseLdlt> coarse_factor;

  std::size_t num_levels() const { return levels.size(); }
  bool singular() const { return !levels.empty() && levels.front().kernel_singular; }
};

AmgHierarchy setup_hierarchy(const CsrMatrix& a, const AmgConfig& config);
// Same, with A * 1 supplied by the caller (e.g. known exactly from assembly).
AmgHierarchy setup_hierarchy(const CsrMatrix& a, const AmgConfig& config,
                             std::span<const double> a_one);

// One application of the kernel-augmented smoother, e += Rhat (rhs - A e), or
// of its transpose.
void smooth(const AmgLevel& level, double omega, std::span<double> e,
            std::span<const double> rhs, bool transpose, std::uint64_t* work = nullptr);

// Returns the W-cycle output g = e + B (zeta - A e) on the given level.
std::vector<double> w_cycle(const AmgHierarchy& h, std::span<const double> zeta,
                            std::span<const double> e, std::size_t level = 0,
                            std::uint64_t* work = nullptr);

struct AmgSolveResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  bool converged = false;
  double relative_residual = 0.0;
  std::vector<double> history;
  std::uint64_t work = 0;  // multiply-adds spent in cycles
};

// x <- x + W-cycle(f - A x) from x = 0 until |f - A x| / |f| <= tol. For a
// singular hierarchy f is projected to mean zero and the iterate kept there.
AmgSolveResult amg_solve(const AmgHierarchy& h, std::span<const double> f, double tol,
                         std::size_t max_iter);
AmgSolveResult amg_solve(const CsrMatrix& a, std::span<const double> f,
                         const AmgConfig& config, double tol, std::size_t max_iter);

double operator_complexity(const AmgHierarchy& h);

struct LevelInfo {
  std::size_t level;
  std::size_t size;
  std::size_t nnz;
};
std::vector<LevelInfo> hierarchy_summary(const AmgHierarchy& h);

// Power iteration on I - B A in the A inner product from random mean-zero
// starts; returns the largest estimate over the trials.
double contraction_factor_estimate(const AmgHierarchy& h, int trials, int iterations = 60,
                                   std::uint64_t seed = 1);

}  // namespace transolve
