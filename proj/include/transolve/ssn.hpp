#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "transolve/problem.hpp"
#include "transolve/reduction.hpp"

namespace transolve {

// Data of one inner equation
//
//   F(lambda) = beta_next lambda - H proj(D^{-1}(w - H^T lambda)) - lambda_tilde,
//
// with D = diag(eta I_mn, tau I_n, tau I_m). F is the gradient of a
// beta_next-strongly convex dual objective.
struct InnerProblemView {
  const GeneralizedTransportProblem* problem = nullptr;
  double beta_next = 0.0;
  double eta = 0.0;
  double tau = 0.0;
  std::vector<double> w;             // primal size
  std::vector<double> lambda_tilde;  // dual size

  double scale(std::size_t k) const { return k < problem->plan_size() ? eta : tau; }
  void validate() const;
};

// u(lambda) = proj(D^{-1}(w - H^T lambda))
std::vector<double> primal_from_dual(const InnerProblemView& view, std::span<const double> lambda);

std::vector<double> eval_Fk(const InnerProblemView& view, std::span<const double> lambda);

// Dual objective in its Moreau form: no difference of large quadratic terms
// is formed, so values stay accurate when D is large.
double eval_dual_objective(const InnerProblemView& view, std::span<const double> lambda);

// Chosen element of the Clarke subdifferential of the box projection at
// D^{-1}(w - H^T lambda): 1 strictly inside the bounds, 0 otherwise.
struct ClarkeDiag {
  std::vector<unsigned char> d;
  std::size_t active() const;
};

ClarkeDiag clarke_diagonal(const InnerProblemView& view, std::span<const double> lambda);

// beta_next I + H D^{-1} U H^T in the generic form: epsilon = beta_next,
// s = d_x / eta, t = (d_y, d_z) / tau.
NewtonSystem build_newton_system(const InnerProblemView& view, const ClarkeDiag& diag);

// Matrix-free product with the Newton matrix.
std::vector<double> apply_newton_matrix(const InnerProblemView& view, const ClarkeDiag& diag,
                                        std::span<const double> v);

struct SsnConfig {
  double tau_ls = 0.2;
  double delta_ls = 0.9;
  std::size_t j_max = 15;
  std::size_t l_max = 50;
  // Residual tolerance for a standalone solve; the outer loop overrides it.
  double tol = 1e-10;
  double tol_floor = 1e-11;
  void validate() const;
};

struct LineSearchResult {
  std::size_t exponent = 0;
  double step = 1.0;
  bool success = false;
  // Accepted on the roundoff test: the Armijo decrease was below the
  // resolution of the objective values and the residual norm decreased.
  bool roundoff_accept = false;
  // The delta ladder was exhausted and the step was found by bisection on the
  // Armijo test.
  bool bisected = false;
  std::vector<double> lambda;
  std::vector<double> residual;
  double objective = 0.0;
};

// Backtracking on step = delta^l, l = 0, 1, ..., l_max. If every rung fails,
// the largest step below delta^l_max passing the Armijo test is located by
// bisection; failure is reported only when none is found.
LineSearchResult armijo_line_search(const InnerProblemView& view, std::span<const double> lambda,
                                    std::span<const double> residual,
                                    std::span<const double> direction, const SsnConfig& config);

// Solves the Newton system for the given right-hand side.
using NewtonLinearSolver =
    std::function<LinearSolveOutcome(const NewtonSystem&, std::span<const double>)>;

NewtonLinearSolver hybrid_linear_solver(const HybridPolicy& policy);
// Dense factorization of the generic matrix; for small problems and tests.
NewtonLinearSolver dense_linear_solver();

enum class SsnStatus { Converged, MaxIterations, LineSearchStall };

struct SsnResult {
  std::vector<double> lambda;
  std::vector<double> residual;
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  SsnStatus status = SsnStatus::MaxIterations;
  std::vector<std::size_t> linear_iterations;  // per Newton step, max over components
  std::vector<double> residual_history;        // |F| before each step and at exit
  std::size_t steepest_descent_fallbacks = 0;
  std::size_t roundoff_accepts = 0;
  std::size_t bisected_searches = 0;
};

// Damped semismooth Newton from lambda0 until |F| <= config.tol or j_max
// steps. At least one Newton step is taken; a non-descent Newton direction
// is replaced by -F.
SsnResult ssn_solve(const InnerProblemView& view, std::span<const double> lambda0,
                    const SsnConfig& config, const NewtonLinearSolver& linear_solver);

}  // namespace transolve
