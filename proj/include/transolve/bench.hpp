#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "transolve/amg.hpp"
#include "transolve/sparse.hpp"

namespace transolve {

// Unit-weight graph Laplacian of the (2^k + 1) x (2^k + 1) grid with
// horizontal, vertical and both diagonal edges, plus epsilon * I.
CsrMatrix grid_graph_laplacian(std::size_t k, double epsilon = 0.0);
// 5-point (4-neighbor) grid Laplacian on side x side nodes plus epsilon * I.
CsrMatrix grid4_laplacian(std::size_t side, double epsilon = 0.0);
// Path graph on n nodes plus epsilon * I.
CsrMatrix path_laplacian(std::size_t n, double epsilon = 0.0);

// Seeded mean-zero right-hand side.
std::vector<double> mean_zero_rhs(std::size_t n, std::uint64_t seed);

struct BenchConfig {
  std::vector<std::size_t> grid_k{4, 6};
  std::vector<double> eps{1e-4, 1e-6, 1e-8, 1e-10, 0.0};
  double tol = 1e-11;
  std::size_t amg_max_iter = 200;
  std::size_t pcg_max_iter = 200000;
  AmgConfig amg;
  std::uint64_t seed = 2024;
  std::size_t threads = 1;
  bool run_pcg = true;
};

struct BenchRow {
  std::size_t inv_h = 0;
  double epsilon = 0.0;
  std::size_t itamg = 0;
  std::size_t itpcg = 0;
  std::size_t levels = 0;
  double opcom = 0.0;
  bool amg_converged = false;
  bool pcg_converged = false;
};

BenchRow bench_one(std::size_t grid_k, double epsilon, const BenchConfig& config);
// One row per (grid_k, eps) pair, ordered by grid_k then eps.
std::vector<BenchRow> run_amg_bench(const BenchConfig& config);
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace transolve
