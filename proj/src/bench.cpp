#include "transolve/bench.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "transolve/error.hpp"
#include "transolve/vector_ops.hpp"

namespace transolve {

namespace {

CsrMatrix laplacian_from_edges(std::size_t n,
                               const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                               double epsilon) {
  std::vector<Triplet> trips;
  trips.reserve(4 * edges.size() + n);
  std::vector<double> degree(n, 0.0);
  for (const auto& [i, j] : edges) {
    trips.push_back({i, j, -1.0});
    trips.push_back({j, i, -1.0});
    degree[i] += 1.0;
    degree[j] += 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) trips.push_back({i, i, degree[i] + epsilon});
  return CsrMatrix::from_triplets(n, n, std::move(trips));
}

}  // namespace

CsrMatrix grid_graph_laplacian(std::size_t k, double epsilon) {
  if (k > 12) throw InvalidInput("grid level too large");
  const std::size_t side = (std::size_t{1} << k) + 1;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  auto id = [side](std::size_t x, std::size_t y) { return x + y * side; };
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      if (x + 1 < side) edges.emplace_back(id(x, y), id(x + 1, y));
      if (y + 1 < side) edges.emplace_back(id(x, y), id(x, y + 1));
      if (x + 1 < side && y + 1 < side) {
        edges.emplace_back(id(x, y), id(x + 1, y + 1));
        edges.emplace_back(id(x + 1, y), id(x, y + 1));
      }
    }
  }
  return laplacian_from_edges(side * side, edges, epsilon);
}

CsrMatrix grid4_laplacian(std::size_t side, double epsilon) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      if (x + 1 < side) edges.emplace_back(x + y * side, x + 1 + y * side);
      if (y + 1 < side) edges.emplace_back(x + y * side, x + (y + 1) * side);
    }
  }
  return laplacian_from_edges(side * side, edges, epsilon);
}

CsrMatrix path_laplacian(std::size_t n, double epsilon) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return laplacian_from_edges(n, edges, epsilon);
}

std::vector<double> mean_zero_rhs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> f(n);
  for (double& v : f) v = unif(rng);
  remove_mean(f);
  return f;
}

BenchRow bench_one(std::size_t grid_k, double epsilon, const BenchConfig& config) {
  const CsrMatrix a = grid_graph_laplacian(grid_k, epsilon);
  const std::vector<double> f = mean_zero_rhs(a.rows(), config.seed + grid_k);
  BenchRow row;
  row.inv_h = std::size_t{1} << grid_k;
  row.epsilon = epsilon;
  const AmgHierarchy h = setup_hierarchy(a, config.amg);
  row.levels = h.num_levels();
  row.opcom = operator_complexity(h);
  const AmgSolveResult amg = amg_solve(h, f, config.tol, config.amg_max_iter);
  row.itamg = amg.iterations;
  row.amg_converged = amg.converged;
  if (config.run_pcg) {
    const PcgResult pcg = pcg_jacobi(a, f, config.tol, config.pcg_max_iter, epsilon == 0.0);
    row.itpcg = pcg.iterations;
    row.pcg_converged = pcg.converged;
  }
  return row;
}

std::vector<BenchRow> run_amg_bench(const BenchConfig& config) {
  std::vector<std::pair<std::size_t, double>> jobs;
  for (std::size_t k : config.grid_k) {
    for (double e : config.eps) jobs.emplace_back(k, e);
  }
  std::vector<BenchRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        rows[j] = bench_one(jobs[j].first, jobs[j].second, config);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = std::clamp<std::size_t>(config.threads, 1, std::max<std::size_t>(jobs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "inv_h,epsilon,itamg,itpcg,J,opcom,amg_converged,pcg_converged\n";
  for (const BenchRow& r : rows) {
    out << r.inv_h << "," << r.epsilon << "," << r.itamg << "," << r.itpcg << "," << r.levels
        << "," << r.opcom << "," << (r.amg_converged ? 1 : 0) << ","
        << (r.pcg_converged ? 1 : 0) << "\n";
  }
}

}  // namespace transolve
