#include <random>

#include "doctest.h"
#include "support/dense_oracle.hpp"
#include "transolve/amg.hpp"
#include "transolve/bench.hpp"
#include "transolve/reduction.hpp"
#include "transolve/vector_ops.hpp"

using namespace transolve;
using testsupport::to_eigen;

namespace {

CsrMatrix random_graph_laplacian(std::size_t n, double density, double epsilon,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(density);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  std::vector<Triplet> t;
  std::vector<double> deg(n, epsilon);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!edge(rng) && j != i + 1) continue;
      const double w = weight(rng);
      t.push_back({i, j, -w});
      t.push_back({j, i, -w});
      deg[i] += w;
      deg[j] += w;
    }
  }
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, deg[i]});
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

AmgConfig jacobi_config() {
  AmgConfig c;
  c.smoother_fine = SmootherKind::WeightedJacobi;
  c.smoother_coarse = SmootherKind::WeightedJacobi;
  return c;
}

double a_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& e) { return std::sqrt(e.dot(a * e)); }

}  // namespace

TEST_SUITE("amg") {
  TEST_CASE("strength of connection") {
    const CsrMatrix a = CsrMatrix::from_triplets(2, 2, {{0, 0, 2}, {0, 1, -1}, {1, 0, -1}, {1, 1, 2}});
    CHECK(strength_of_connection(a, 0, 1) == 1.0);
    const CsrMatrix b = path_laplacian(4);
    CHECK(strength_of_connection(b, 0, 3) == 0.0);
    const CsrMatrix g = grid_graph_laplacian(2);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j : g.row_cols(i)) {
        if (j != i) CHECK(strength_of_connection(g, i, j) == 1.0);
      }
    }
  }

  TEST_CASE("C/F split of a five-node path") {
    const CfSplit s = cf_split(path_laplacian(5), 0.25);
    CHECK(s.coarse == std::vector<std::size_t>{0, 2, 4});
    CHECK(s.fine == std::vector<std::size_t>{1, 3});
  }

  TEST_CASE("diagonal matrix makes every node coarse") {
    const std::vector<double> d{1, 2, 3};
    const CfSplit s = cf_split(CsrMatrix::diagonal(d), 0.25);
    CHECK(s.coarse.size() == 3);
  }

  TEST_CASE("coarse nodes are pairwise not strongly connected") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const CsrMatrix a = random_graph_laplacian(200, 0.03, 0.0, seed);
      const CfSplit s = cf_split(a, 0.25);
      for (std::size_t i : s.coarse) {
        for (std::size_t j : s.coarse) {
          if (i != j) CHECK(strength_of_connection(a, i, j) <= 0.25);
        }
      }
      for (std::size_t f : s.fine) {
        bool has_coarse = false;
        for (std::size_t j : a.row_cols(f)) {
          has_coarse = has_coarse || (s.is_coarse[j] && strength_of_connection(a, f, j) > 0.25);
        }
        CHECK(has_coarse);
      }
    }
  }

  TEST_CASE("ideal interpolation on a five-node path") {
    const CsrMatrix a = path_laplacian(5);
    CfSplit s = cf_split(a, 0.25);
    const CsrMatrix p = build_interpolation(a, s, InterpolationKind::Ideal);
    CHECK(p.cols() == 3);
    CHECK(p.at(1, 0) == doctest::Approx(0.5));
    CHECK(p.at(1, 1) == doctest::Approx(0.5));
    CHECK(p.at(3, 1) == doctest::Approx(0.5));
    CHECK(p.at(3, 2) == doctest::Approx(0.5));
    CHECK(p.at(0, 0) == 1.0);
  }

  TEST_CASE("interpolation preserves constants") {
    for (InterpolationKind kind : {InterpolationKind::Ideal, InterpolationKind::Standard}) {
      const CsrMatrix a = random_graph_laplacian(150, 0.05, 1e-3, 7);
      CfSplit s = cf_split(a, 0.25);
      const CsrMatrix p = build_interpolation(a, s, kind);
      for (double v : spmv(p, std::vector<double>(p.cols(), 1.0))) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    }
  }

  TEST_CASE("ideal interpolation on a bipartite Laplacian matches the dense Schur rows") {
    std::mt19937_64 rng(3);
    const std::size_t m = 6, n = 5;
    std::vector<double> s = testsupport::random_vector(m * n, rng, 0.1, 1.0);
    const ReducedLaplacianSystem sys =
        assemble_bipartite_laplacian(m, n, s, std::vector<double>(n + m, 0.0), 0.0);
    const CsrMatrix a = sys.laplacian();
    std::vector<char> mask(n + m, 0);
    for (std::size_t j = 0; j < n; ++j) mask[j] = 1;
    CfSplit split = split_from_mask(mask);
    const CsrMatrix p = build_interpolation(a, split, InterpolationKind::Ideal);
    const Eigen::MatrixXd ae = to_eigen(a);
    const auto nn = static_cast<Eigen::Index>(n), mm = static_cast<Eigen::Index>(m);
    const Eigen::MatrixXd aff = ae.block(nn, nn, mm, mm);
    const Eigen::MatrixXd afc = ae.block(nn, 0, mm, nn);
    const Eigen::MatrixXd w = -aff.inverse() * afc;
    const Eigen::MatrixXd pe = to_eigen(p);
    CHECK((pe.block(nn, 0, mm, nn) - w).norm() < 1e-13);
    CHECK((pe.block(0, 0, nn, nn) - Eigen::MatrixXd::Identity(nn, nn)).norm() == 0.0);
  }

  TEST_CASE("Galerkin coarse operator") {
    const CsrMatrix a = random_graph_laplacian(60, 0.1, 0.1, 4);
    CHECK((to_eigen(galerkin_coarse(a, CsrMatrix::identity(60))) - to_eigen(a)).norm() < 1e-14);
    CfSplit s = cf_split(a, 0.25);
    const CsrMatrix p = build_interpolation(a, s, InterpolationKind::Standard);
    const CsrMatrix ac = galerkin_coarse(a, p);
    const Eigen::MatrixXd pe = to_eigen(p);
    const Eigen::MatrixXd ref = pe.transpose() * to_eigen(a) * pe;
    CHECK((to_eigen(ac) - ref).norm() <= 1e-13 * ref.norm());
    CHECK(ac.symmetry_defect() == 0.0);
    const CsrMatrix l = random_graph_laplacian(60, 0.1, 0.0, 4);
    CfSplit sl = cf_split(l, 0.25);
    const CsrMatrix pl = build_interpolation(l, sl, InterpolationKind::Standard);
    const CsrMatrix lc = galerkin_coarse(l, pl);
    CHECK(norm2(spmv(lc, std::vector<double>(lc.rows(), 1.0))) <= 1e-12 * 60.0);
  }

  TEST_CASE("Jacobi with unit weight solves a diagonal system in one sweep") {
    const std::vector<double> d{1, 2, 4, 8};
    const AmgHierarchy h = setup_hierarchy(CsrMatrix::diagonal(d), jacobi_config());
    const std::vector<double> f{1, 1, 1, 1};
    std::vector<double> e(4, 0.0);
    smooth(h.levels.front(), 1.0, e, f, false);
    for (std::size_t i = 0; i < 4; ++i) CHECK(e[i] == doctest::Approx(1.0 / d[i]));
    const AmgSolveResult r = amg_solve(CsrMatrix::diagonal(d), f, jacobi_config(), 1e-12, 10);
    CHECK(r.iterations == 1);
  }

  TEST_CASE("kernel-augmented smoother removes the constant residual component") {
    const std::size_t n = 50;
    const CsrMatrix a = path_laplacian(n, 1e-12);
    const AmgHierarchy h = setup_hierarchy(a, jacobi_config());
    REQUIRE_FALSE(h.singular());
    std::mt19937_64 rng(5);
    const std::vector<double> f = testsupport::random_vector(n, rng, 0.0, 1.0);
    std::vector<double> e(n, 0.0);
    // 1^T (f - A e) = 1^T f - (A 1)^T e for symmetric A
    std::vector<double> a_one(n);
    spmv(a, std::vector<double>(n, 1.0), a_one);
    const double before = std::abs(sum(f));
    smooth(h.levels.front(), 0.5, e, f, false);
    CHECK(std::abs(sum(f) - dot(a_one, e)) <= 1e-10 * before);
  }

  TEST_CASE("smoother error propagation is an A-norm contraction") {
    for (double eps : {1e-14, 1e-8}) {
      const CsrMatrix a = random_graph_laplacian(120, 0.05, eps, 6);
      const AmgHierarchy h = setup_hierarchy(a, jacobi_config());
      const Eigen::MatrixXd ae = to_eigen(a);
      std::mt19937_64 rng(7);
      std::vector<double> e = testsupport::random_vector(120, rng);
      const std::vector<double> zero(120, 0.0);
      double ratio = 0.0;
      for (int it = 0; it < 30; ++it) {
        const double before = a_norm(ae, to_eigen(e));
        smooth(h.levels.front(), 0.5, e, zero, false);
        const double after = a_norm(ae, to_eigen(e));
        ratio = after / before;
        CHECK(ratio < 1.0);
        for (double& v : e) v /= after;
      }
      CHECK(ratio < 1.0);
    }
  }

  TEST_CASE("hierarchy on a coarse-enough input has one level") {
    const AmgHierarchy h = setup_hierarchy(path_laplacian(30), AmgConfig{});
    CHECK(h.num_levels() == 1);
    CHECK(operator_complexity(h) == 1.0);
  }

  TEST_CASE("grid hierarchy coarsens and keeps constants") {
    const CsrMatrix a = grid_graph_laplacian(6);
    const AmgHierarchy h = setup_hierarchy(a, AmgConfig{});
    CHECK(h.num_levels() >= 3);
    CHECK(h.num_levels() <= 7);
    for (std::size_t l = 0; l + 1 < h.num_levels(); ++l) {
      CHECK(h.levels[l + 1].a.rows() <= 0.9 * h.levels[l].a.rows());
      for (double v : spmv(h.levels[l].p, std::vector<double>(h.levels[l].p.cols(), 1.0))) {
        CHECK(v == doctest::Approx(1.0).epsilon(1e-13));
      }
      const CsrMatrix& al = h.levels[l + 1].a;
      double scale = 0.0;
      for (double v : al.values()) scale = std::max(scale, std::abs(v));
      CHECK(al.symmetry_defect() <= 1e-13 * scale);
    }
    double prev = 0.0;
    for (const LevelInfo& info : hierarchy_summary(h)) {
      CHECK(info.size > 0);
      prev += 1.0;
    }
    CHECK(prev == static_cast<double>(h.num_levels()));
  }

  TEST_CASE("operator complexity of the 17x17 grid") {
    const double oc = operator_complexity(setup_hierarchy(grid_graph_laplacian(4), AmgConfig{}));
    CHECK(oc >= 1.2);
    CHECK(oc <= 2.0);
    AmgConfig deep;
    deep.coarsest_max = 4;
    const AmgHierarchy hd = setup_hierarchy(grid_graph_laplacian(4), deep);
    CHECK(operator_complexity(hd) >= oc);
  }

  TEST_CASE("zero right-hand side gives a zero cycle") {
    const CsrMatrix a = grid_graph_laplacian(4, 1e-4);
    const AmgHierarchy h = setup_hierarchy(a, AmgConfig{});
    const std::vector<double> zero(a.rows(), 0.0);
    for (double v : w_cycle(h, zero, zero)) CHECK(v == 0.0);
  }

  TEST_CASE("two-level solve with an exact coarse solve matches the dense solution") {
    AmgConfig c = jacobi_config();
    c.coarsest_max = 6;
    const CsrMatrix a = path_laplacian(10, 1e-2);
    const AmgHierarchy h = setup_hierarchy(a, c);
    REQUIRE(h.num_levels() == 2);
    REQUIRE(h.coarse_factor);
    std::mt19937_64 rng(8);
    const std::vector<double> f = testsupport::random_vector(10, rng);
    const AmgSolveResult r = amg_solve(h, f, 1e-12, 15);
    CHECK(r.converged);
    const Eigen::VectorXd ref = to_eigen(a).ldlt().solve(to_eigen(f));
    CHECK(testsupport::rel_diff(to_eigen(r.x), ref) < 1e-10);
  }

  TEST_CASE("AMG on the 65x65 grid") {
    const std::vector<double> f = mean_zero_rhs(65 * 65, 9);
    const AmgSolveResult r = amg_solve(grid_graph_laplacian(6, 1e-8), f, AmgConfig{}, 1e-11, 50);
    CHECK(r.converged);
    CHECK(r.iterations <= 15);
    const AmgSolveResult z = amg_solve(grid_graph_laplacian(6, 0.0), f, AmgConfig{}, 1e-11, 50);
    CHECK(z.converged);
    CHECK(std::abs(sum(z.x)) < 1e-8 * norm2(z.x));
  }

  TEST_CASE("AMG error decreases in the A-norm") {
    const CsrMatrix a = random_graph_laplacian(300, 0.02, 1e-3, 10);
    const Eigen::MatrixXd ae = to_eigen(a);
    std::mt19937_64 rng(11);
    const std::vector<double> f = testsupport::random_vector(300, rng);
    const Eigen::VectorXd xs = ae.ldlt().solve(to_eigen(f));
    AmgConfig c;
    c.coarsest_max = 20;
    c.direct_coarse_max = 20;
    const AmgHierarchy h = setup_hierarchy(a, c);
    double prev = a_norm(ae, xs);
    for (std::size_t it = 1; it <= 8; ++it) {
      const AmgSolveResult r = amg_solve(h, f, 0.0, it);
      const double err = a_norm(ae, to_eigen(r.x) - xs);
      CHECK(err <= prev * (1.0 + 1e-9));
      prev = err;
    }
  }

  TEST_CASE("iteration counts vary little across shifts") {
    const std::vector<double> f = mean_zero_rhs(33 * 33, 12);
    std::size_t lo = 1000, hi = 0;
    for (double eps : {1e-4, 1e-6, 1e-8, 1e-10, 0.0}) {
      const AmgSolveResult r = amg_solve(grid_graph_laplacian(5, eps), f, AmgConfig{}, 1e-11, 100);
      CHECK(r.converged);
      lo = std::min(lo, r.iterations);
      hi = std::max(hi, r.iterations);
    }
    CHECK(hi - lo <= 5);
  }

  TEST_CASE("W-cycle work is proportional to the operator size") {
    const CsrMatrix a = grid_graph_laplacian(6, 1e-6);
    const AmgHierarchy h = setup_hierarchy(a, AmgConfig{});
    const std::vector<double> f = mean_zero_rhs(a.rows(), 13);
    const AmgSolveResult r = amg_solve(h, f, 1e-11, 50);
    const double per_iter = static_cast<double>(r.work) / static_cast<double>(r.iterations);
    const double bound = operator_complexity(h) * 2.0 * h.config.theta * static_cast<double>(a.nnz()) * 4.0;
    CHECK(per_iter <= bound);
  }

  TEST_CASE("two-level contraction on a path") {
    AmgConfig c = jacobi_config();
    c.coarsest_max = 12;
    const AmgHierarchy h = setup_hierarchy(path_laplacian(20, 1e-6), c);
    REQUIRE(h.num_levels() == 2);
    const double rho = contraction_factor_estimate(h, 4);
    CHECK(rho < 1.0);
    CHECK(rho > 0.0);
  }
}
