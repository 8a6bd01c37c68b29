#include <random>
#include <sstream>

#include "doctest.h"
#include "support/dense_oracle.hpp"
#include "transolve/bench.hpp"
#include "transolve/error.hpp"
#include "transolve/matrix_market.hpp"
#include "transolve/sparse.hpp"

using namespace transolve;
using testsupport::to_eigen;

namespace {

CsrMatrix random_sparse(std::size_t rows, std::size_t cols, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::bernoulli_distribution keep(density);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (keep(rng)) t.push_back({i, j, unif(rng)});
    }
  }
  return CsrMatrix::from_triplets(rows, cols, std::move(t));
}

CsrMatrix random_spd(std::size_t n, std::uint64_t seed) {
  const CsrMatrix b = random_sparse(n, n, 0.3, seed);
  CsrMatrix a = multiply(b.transpose(), b);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) t.push_back({i, cols[k], vals[k]});
    t.push_back({i, i, 0.5});
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

}  // namespace

TEST_SUITE("sparse") {
  TEST_CASE("from_triplets sums duplicates and drops exact zeros") {
    const CsrMatrix a = CsrMatrix::from_triplets(
        2, 3, {{0, 1, 1.0}, {0, 1, 2.0}, {1, 0, 4.0}, {1, 2, 1.0}, {1, 2, -1.0}});
    CHECK(a.nnz() == 2);
    CHECK(a.at(0, 1) == 3.0);
    CHECK(a.at(1, 0) == 4.0);
    CHECK(a.at(1, 2) == 0.0);
  }

  TEST_CASE("spmv and transpose agree with a dense product") {
    const CsrMatrix a = random_sparse(7, 5, 0.4, 3);
    std::mt19937_64 rng(4);
    const std::vector<double> x = testsupport::random_vector(5, rng);
    const std::vector<double> y = testsupport::random_vector(7, rng);
    const Eigen::MatrixXd d = to_eigen(a);
    CHECK((to_eigen(spmv(a, x)) - d * to_eigen(x)).norm() < 1e-14);
    CHECK((to_eigen(transpose_spmv(a, y)) - d.transpose() * to_eigen(y)).norm() < 1e-14);
    CHECK((to_eigen(a.transpose()) - d.transpose()).norm() == 0.0);
  }

  TEST_CASE("multiply and triple product agree with dense products") {
    const CsrMatrix a = random_sparse(6, 6, 0.5, 5);
    const CsrMatrix p = random_sparse(6, 3, 0.5, 6);
    CHECK((to_eigen(multiply(a, p)) - to_eigen(a) * to_eigen(p)).norm() < 1e-13);
    const Eigen::MatrixXd pe = to_eigen(p);
    CHECK((to_eigen(triple_product(p, a)) - pe.transpose() * to_eigen(a) * pe).norm() < 1e-13);
    CHECK(symmetrize(a).symmetry_defect() == 0.0);
  }

  TEST_CASE("principal submatrix follows the node order") {
    const CsrMatrix a = random_sparse(5, 5, 0.6, 8);
    const std::vector<std::size_t> nodes{3, 0, 4};
    const CsrMatrix s = principal_submatrix(a, nodes);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) CHECK(s.at(i, j) == a.at(nodes[i], nodes[j]));
    }
  }

  TEST_CASE("dense LDLT solves SPD systems") {
    const CsrMatrix a = random_spd(12, 9);
    std::mt19937_64 rng(10);
    const std::vector<double> b = testsupport::random_vector(12, rng);
    const DenseLdlt f(to_dense(a));
    CHECK(f.rank() == 12);
    const Eigen::VectorXd ref = to_eigen(a).ldlt().solve(to_eigen(b));
    CHECK(testsupport::rel_diff(to_eigen(f.solve(b)), ref) < 1e-12);
  }

  TEST_CASE("dense LDLT with the constant kernel returns the mean-zero solution") {
    const CsrMatrix l = path_laplacian(9);
    std::mt19937_64 rng(11);
    std::vector<double> b = testsupport::random_vector(9, rng);
    LdltOptions opt;
    opt.constant_kernel = true;
    const DenseLdlt f(to_dense(l), opt);
    CHECK(f.rank() == 8);
    const std::vector<double> x = f.solve(b);
    Eigen::VectorXd be = to_eigen(b);
    be.array() -= be.mean();
    const Eigen::VectorXd ref = to_eigen(l).completeOrthogonalDecomposition().solve(be);
    CHECK(testsupport::rel_diff(to_eigen(x), ref) < 1e-10);
    CHECK(std::abs(to_eigen(x).sum()) < 1e-12);
  }

  TEST_CASE("dense LDLT rejects indefinite input") {
    DenseMatrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = -1.0;
    CHECK_THROWS_AS(DenseLdlt{a}, SolverFailure);
  }

  TEST_CASE("PCG converges and its A-norm error is non-increasing") {
    const CsrMatrix a = random_spd(30, 12);
    std::mt19937_64 rng(13);
    const std::vector<double> b = testsupport::random_vector(30, rng);
    const Eigen::MatrixXd ae = to_eigen(a);
    const Eigen::VectorXd xs = ae.ldlt().solve(to_eigen(b));
    const PcgResult r = pcg_jacobi(a, b, 1e-12, 500);
    CHECK(r.converged);
    CHECK(testsupport::rel_diff(to_eigen(r.x), xs) < 1e-9);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= r.iterations; ++it) {
      const PcgResult partial = pcg_jacobi(a, b, 0.0, it);
      const Eigen::VectorXd e = to_eigen(partial.x) - xs;
      const double err = std::sqrt(e.dot(ae * e));
      CHECK(err <= prev * (1.0 + 1e-10));
      prev = err;
    }
  }

  TEST_CASE("PCG on a singular Laplacian stays in the mean-zero subspace") {
    const CsrMatrix l = grid4_laplacian(6);
    const std::vector<double> b = mean_zero_rhs(36, 3);
    const PcgResult r = pcg_jacobi(l, b, 1e-11, 1000, true);
    CHECK(r.converged);
    CHECK(std::abs(to_eigen(r.x).sum()) < 1e-10);
    CHECK(r.relative_residual <= 1e-11);
  }

  TEST_CASE("Matrix Market round trip") {
    const CsrMatrix a = random_sparse(4, 6, 0.5, 14);
    std::stringstream general;
    write_matrix_market(general, a);
    const CsrMatrix g = read_matrix_market(general);
    CHECK((to_eigen(g) - to_eigen(a)).norm() == 0.0);

    const CsrMatrix l = grid_graph_laplacian(2, 0.5);
    std::stringstream sym;
    write_matrix_market(sym, l, true);
    const CsrMatrix s = read_matrix_market(sym);
    CHECK((to_eigen(s) - to_eigen(l)).norm() == 0.0);
  }

  TEST_CASE("Matrix Market rejects malformed headers") {
    std::stringstream bad("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
    CHECK_THROWS_AS(read_matrix_market(bad), InvalidInput);
  }
}
