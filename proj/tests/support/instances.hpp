#pragma once

#include <random>

#include "support/dense_oracle.hpp"
#include "transolve/ipd.hpp"
#include "transolve/problem.hpp"
#include "transolve/vector_ops.hpp"

namespace testsupport {

inline transolve::GeneralizedTransportProblem random_ot(std::size_t m, std::size_t n,
                                                        std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  transolve::DenseMatrix cost(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost(i, j) = unif(rng);
  }
  std::vector<double> mu(n), nu(m);
  for (double& v : mu) v = unif(rng);
  for (double& v : nu) v = unif(rng);
  const double smu = transolve::sum(mu), snu = transolve::sum(nu);
  for (double& v : nu) v *= smu / snu;
  return transolve::build_optimal_transport(cost, mu, nu);
}

inline transolve::GeneralizedTransportProblem random_partial(std::size_t m, std::size_t n,
                                                             double fraction,
                                                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  transolve::DenseMatrix cost(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost(i, j) = unif(rng);
  }
  std::vector<double> mu(n), nu(m);
  for (double& v : mu) v = unif(rng);
  for (double& v : nu) v = unif(rng);
  const double amax = std::min(transolve::sum(mu), transolve::sum(nu));
  return transolve::build_partial_transport(cost, mu, nu, fraction * amax);
}

inline transolve::GeneralizedTransportProblem random_birkhoff(std::size_t n,
                                                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  transolve::DenseMatrix phi(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) phi(i, j) = unif(rng);
  }
  return transolve::build_birkhoff_projection(phi);
}

// Inner problem at a random (u, v, lambda) with the given step and beta.
inline transolve::StepParams random_step(const transolve::GeneralizedTransportProblem& p,
                                         double alpha, double beta, std::mt19937_64& rng) {
  transolve::IterateState s = transolve::cold_start(p);
  s.beta = beta;
  s.v = random_vector(p.primal_size(), rng, 0.0, 1.0);
  s.u = random_vector(p.primal_size(), rng, 0.0, 1.0);
  transolve::proj_sigma(p, s.u);
  s.lambda = random_vector(p.dual_size(), rng);
  return transolve::compute_step_params(s, alpha, p);
}

}  // namespace testsupport
