#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "transolve/problem.hpp"
#include "transolve/reduction.hpp"
#include "transolve/sparse.hpp"
#include "transolve/ssn.hpp"

namespace testsupport {

using transolve::CsrMatrix;
using transolve::DenseMatrix;
using transolve::GeneralizedTransportProblem;

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::MatrixXd to_eigen(const CsrMatrix& a) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.rows()),
                                              static_cast<Eigen::Index>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[k])) += vals[k];
    }
  }
  return out;
}

inline Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
    }
  }
  return out;
}

// Incidence of the marginal map: rows are column nodes then row nodes,
// columns are plan entries in vec order.
inline Eigen::MatrixXd incidence(std::size_t m, std::size_t n) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + m),
                                            static_cast<Eigen::Index>(m * n));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto e = static_cast<Eigen::Index>(i + j * m);
      t(static_cast<Eigen::Index>(j), e) = 1.0;
      t(static_cast<Eigen::Index>(n + i), e) = 1.0;
    }
  }
  return t;
}

// Constraint matrix H acting on u = (x, y, z).
inline Eigen::MatrixXd dense_h(const GeneralizedTransportProblem& p) {
  const auto mn = static_cast<Eigen::Index>(p.m * p.n);
  const auto big_m = static_cast<Eigen::Index>(p.n + p.m);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(big_m + static_cast<Eigen::Index>(p.r), mn + big_m);
  h.block(0, 0, big_m, mn) = incidence(p.m, p.n);
  h.block(0, mn, big_m, big_m) = Eigen::MatrixXd::Identity(big_m, big_m);
  if (p.r == 1) h.block(big_m, 0, 1, mn).setOnes();
  return h;
}

// beta_next I + H D^{-1} U H^T from its definition.
inline Eigen::MatrixXd dense_newton(const transolve::InnerProblemView& view,
                                    const transolve::ClarkeDiag& diag) {
  const Eigen::MatrixXd h = dense_h(*view.problem);
  Eigen::VectorXd w(h.cols());
  for (Eigen::Index k = 0; k < h.cols(); ++k) {
    w(k) = diag.d[static_cast<std::size_t>(k)] ? 1.0 / view.scale(static_cast<std::size_t>(k))
                                                : 0.0;
  }
  return view.beta_next * Eigen::MatrixXd::Identity(h.rows(), h.rows()) +
         h * w.asDiagonal() * h.transpose();
}

// eps I + [[diag(t) + T S T^T, T S 1], [1^T S T^T, 1^T s]].
inline Eigen::MatrixXd dense_generic_oracle(const transolve::NewtonSystem& sys) {
  const Eigen::MatrixXd t = incidence(sys.m, sys.n);
  const Eigen::VectorXd s = to_eigen(sys.s);
  const auto big_m = static_cast<Eigen::Index>(sys.n + sys.m);
  const auto size = static_cast<Eigen::Index>(sys.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size, size);
  a.block(0, 0, big_m, big_m) = t * s.asDiagonal() * t.transpose();
  a.block(0, 0, big_m, big_m).diagonal() += to_eigen(sys.t);
  if (sys.total_mass) {
    const Eigen::VectorXd ts = t * s;
    a.block(0, big_m, big_m, 1) = ts;
    a.block(big_m, 0, 1, big_m) = ts.transpose();
    a(big_m, big_m) = s.sum();
  }
  a.diagonal().array() += sys.epsilon;
  return a;
}

inline Eigen::VectorXd dense_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  return a.fullPivLu().solve(b);
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> unif(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = unif(rng);
  return v;
}

inline double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace testsupport
