#include "transolve/ssn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "transolve/error.hpp"
#include "transolve/vector_ops.hpp"

namespace transolve {

namespace {

// q = w - H^T lambda
std::vector<double> shifted_w(const InnerProblemView& view, std::span<const double> lambda) {
  const GeneralizedTransportProblem& p = *view.problem;
  if (lambda.size() != p.dual_size()) throw DimensionMismatch("inner problem: lambda length");
  std::vector<double> q(p.primal_size());
  apply_ht(p, lambda, q);
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = view.w[k] - q[k];
  return q;
}

struct ObjectiveValue {
  double value = 0.0;
  double magnitude = 0.0;  // sum of absolute values of the summed terms
};

ObjectiveValue dual_objective_terms(const InnerProblemView& view, std::span<const double> lambda) {
  const GeneralizedTransportProblem& p = *view.problem;
  const std::vector<double> q = shifted_w(view, lambda);
  ObjectiveValue out;
  auto add = [&out](double v) {
    out.value += v;
    out.magnitude += std::abs(v);
  };
  add(0.5 * view.beta_next * dot(lambda, lambda));
  add(-dot(view.lambda_tilde, lambda));
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double d = view.scale(k);
    const double lo = p.lower_bound(k);
    const double hi = p.upper_bound(k);
    const double z = q[k] / d;
    if (z < lo) {
      // prox residual q - d*lo is negative; the support function picks lo
      add((q[k] - d * lo) * lo + 0.5 * d * lo * lo);
    } else if (z > hi) {
      if (is_unbounded(hi)) throw SolverFailure("dual objective: unbounded support function");
      add((q[k] - d * hi) * hi + 0.5 * d * hi * hi);
    } else {
      add(0.5 * q[k] * z);
    }
  }
  return out;
}

double roundoff_level(const ObjectiveValue& a, const ObjectiveValue& b) {
  return 64.0 * std::numeric_limits<double>::epsilon() * std::max(a.magnitude, b.magnitude);
}

}  // namespace

void InnerProblemView::validate() const {
  if (!problem) throw InvalidInput("inner problem: missing problem");
  if (!(beta_next > 0.0)) throw InvalidInput("inner problem: beta_next must be positive");
  if (!(tau > 0.0) || !(eta >= tau)) throw InvalidInput("inner problem: need eta >= tau > 0");
  if (w.size() != problem->primal_size() || lambda_tilde.size() != problem->dual_size()) {
    throw DimensionMismatch("inner problem: w or lambda_tilde length");
  }
}

std::vector<double> primal_from_dual(const InnerProblemView& view, std::span<const double> lambda) {
  std::vector<double> u = shifted_w(view, lambda);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] /= view.scale(k);
  proj_sigma(*view.problem, u);
  return u;
}

std::vector<double> eval_Fk(const InnerProblemView& view, std::span<const double> lambda) {
  const GeneralizedTransportProblem& p = *view.problem;
  const std::vector<double> u = primal_from_dual(view, lambda);
  std::vector<double> f(p.dual_size());
  apply_h(p, u, f);
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = view.beta_next * lambda[k] - f[k] - view.lambda_tilde[k];
  }
  return f;
}

double eval_dual_objective(const InnerProblemView& view, std::span<const double> lambda) {
  return dual_objective_terms(view, lambda).value;
}

std::size_t ClarkeDiag::active() const {
  return static_cast<std::size_t>(std::count(d.begin(), d.end(), 1));
}

ClarkeDiag clarke_diagonal(const InnerProblemView& view, std::span<const double> lambda) {
  const GeneralizedTransportProblem& p = *view.problem;
  const std::vector<double> q = shifted_w(view, lambda);
  ClarkeDiag out;
  out.d.assign(q.size(), 0);
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double z = q[k] / view.scale(k);
    out.d[k] = (p.lower_bound(k) < z && z < p.upper_bound(k)) ? 1 : 0;
  }
  return out;
}

NewtonSystem build_newton_system(const InnerProblemView& view, const ClarkeDiag& diag) {
  const GeneralizedTransportProblem& p = *view.problem;
  if (diag.d.size() != p.primal_size()) throw DimensionMismatch("newton system: flag length");
  const std::size_t mn = p.plan_size();
  NewtonSystem sys;
  sys.m = p.m;
  sys.n = p.n;
  sys.total_mass = p.r == 1;
  sys.epsilon = view.beta_next;
  sys.s.resize(mn);
  for (std::size_t k = 0; k < mn; ++k) sys.s[k] = diag.d[k] ? 1.0 / view.eta : 0.0;
  sys.t.resize(p.n + p.m);
  for (std::size_t k = 0; k < p.n + p.m; ++k) sys.t[k] = diag.d[mn + k] ? 1.0 / view.tau : 0.0;
  return sys;
}

std::vector<double> apply_newton_matrix(const InnerProblemView& view, const ClarkeDiag& diag,
                                        std::span<const double> v) {
  const GeneralizedTransportProblem& p = *view.problem;
  std::vector<double> hv(p.primal_size());
  apply_ht(p, v, hv);
  for (std::size_t k = 0; k < hv.size(); ++k) hv[k] = diag.d[k] ? hv[k] / view.scale(k) : 0.0;
  std::vector<double> out(p.dual_size());
  apply_h(p, hv, out);
  axpy(view.beta_next, v, out);
  return out;
}

void SsnConfig::validate() const {
  if (!(tau_ls > 0.0 && tau_ls < 0.5)) throw InvalidInput("ssn: tau must lie in (0, 1/2)");
  if (!(delta_ls > 0.0 && delta_ls < 1.0)) throw InvalidInput("ssn: delta must lie in (0, 1)");
  if (j_max == 0) throw InvalidInput("ssn: j_max must be positive");
  if (!(tol > 0.0) || !(tol_floor > 0.0)) throw InvalidInput("ssn: tolerances must be positive");
}

LineSearchResult armijo_line_search(const InnerProblemView& view, std::span<const double> lambda,
                                    std::span<const double> residual,
                                    std::span<const double> direction, const SsnConfig& config) {
  const double slope = dot(residual, direction);
  const double residual_norm = norm2(residual);
  const ObjectiveValue current = dual_objective_terms(view, lambda);
  LineSearchResult out;
  std::vector<double> trial(lambda.size());
  double step = 1.0;
  for (std::size_t l = 0; l <= config.l_max; ++l, step *= config.delta_ls) {
    for (std::size_t k = 0; k < trial.size(); ++k) trial[k] = lambda[k] + step * direction[k];
    const ObjectiveValue next = dual_objective_terms(view, trial);
    bool accept = next.value <= current.value + config.tau_ls * step * slope;
    bool roundoff = false;
    std::vector<double> next_residual;
    if (!accept && std::abs(next.value - current.value) <= roundoff_level(current, next)) {
      next_residual = eval_Fk(view, trial);
      roundoff = norm2(next_residual) < residual_norm;
      accept = roundoff;
    }
    if (accept) {
      out.exponent = l;
      out.step = step;
      out.success = true;
      out.roundoff_accept = roundoff;
      out.objective = next.value;
      out.residual = next_residual.empty() ? eval_Fk(view, trial) : std::move(next_residual);
      out.lambda = std::move(trial);
      return out;
    }
  }
  // The Armijo test holds on an interval [0, t_A] because the objective is
  // convex along the ray; locate t_A by bisection below the last trial step.
  double lo = 0.0;
  double hi = step / config.delta_ls;
  ObjectiveValue lo_value = current;
  for (int it = 0; it < 100 && hi - lo > 1e-3 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    for (std::size_t k = 0; k < trial.size(); ++k) trial[k] = lambda[k] + mid * direction[k];
    const ObjectiveValue next = dual_objective_terms(view, trial);
    if (next.value <= current.value + config.tau_ls * mid * slope) {
      lo = mid;
      lo_value = next;
    } else {
      hi = mid;
    }
  }
  if (lo > 0.0) {
    for (std::size_t k = 0; k < trial.size(); ++k) trial[k] = lambda[k] + lo * direction[k];
    out.exponent = config.l_max;
    out.step = lo;
    out.success = true;
    out.bisected = true;
    out.objective = lo_value.value;
    out.residual = eval_Fk(view, trial);
    out.lambda = std::move(trial);
    return out;
  }
  out.exponent = config.l_max;
  out.step = 0.0;
  out.lambda.assign(lambda.begin(), lambda.end());
  out.residual.assign(residual.begin(), residual.end());
  out.objective = current.value;
  return out;
}

NewtonLinearSolver hybrid_linear_solver(const HybridPolicy& policy) {
  return [policy](const NewtonSystem& sys, std::span<const double> rhs) {
    return hybrid_solve(sys, rhs, policy);
  };
}

NewtonLinearSolver dense_linear_solver() {
  return [](const NewtonSystem& sys, std::span<const double> rhs) {
    LinearSolveOutcome out;
    const DenseLdlt factor(dense_generic(sys));
    out.solution = factor.solve(rhs);
    return out;
  };
}

SsnResult ssn_solve(const InnerProblemView& view, std::span<const double> lambda0,
                    const SsnConfig& config, const NewtonLinearSolver& linear_solver) {
  view.validate();
  config.validate();
  SsnResult out;
  out.lambda.assign(lambda0.begin(), lambda0.end());
  out.residual = eval_Fk(view, out.lambda);
  for (;;) {
    out.residual_norm = norm2(out.residual);
    out.residual_history.push_back(out.residual_norm);
    if (out.iterations > 0 && out.residual_norm <= config.tol) {
      out.status = SsnStatus::Converged;
      return out;
    }
    if (out.iterations >= config.j_max) {
      out.status = SsnStatus::MaxIterations;
      return out;
    }
    const ClarkeDiag diag = clarke_diagonal(view, out.lambda);
    const NewtonSystem sys = build_newton_system(view, diag);
    std::vector<double> rhs(out.residual.size());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = -out.residual[k];
    LinearSolveOutcome step = linear_solver(sys, rhs);
    out.linear_iterations.push_back(step.stats.max_iterations);
    std::vector<double> direction = std::move(step.solution);
    if (!(dot(out.residual, direction) < 0.0)) {
      direction = rhs;
      ++out.steepest_descent_fallbacks;
    }
    LineSearchResult ls = armijo_line_search(view, out.lambda, out.residual, direction, config);
    ++out.iterations;
    if (ls.bisected) ++out.bisected_searches;
    if (!ls.success) {
      out.status = SsnStatus::LineSearchStall;
      return out;
    }
    if (ls.roundoff_accept) ++out.roundoff_accepts;
    out.lambda = std::move(ls.lambda);
    out.residual = std::move(ls.residual);
  }
}

}  // namespace transolve
