#include "transolve/ipd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "transolve/error.hpp"
#include "transolve/vector_ops.hpp"

namespace transolve {

StepSchedule StepSchedule::constant(double alpha) {
  StepSchedule s;
  s.kind = ScheduleKind::Constant;
  s.alpha = alpha;
  return s;
}

StepSchedule StepSchedule::warmup(double alpha_hi, std::size_t warmup_steps, double alpha_lo) {
  StepSchedule s;
  s.kind = ScheduleKind::Warmup;
  s.alpha_hi = alpha_hi;
  s.warmup_steps = warmup_steps;
  s.alpha_lo = alpha_lo;
  return s;
}

StepSchedule StepSchedule::vanishing(double power) {
  StepSchedule s;
  s.kind = ScheduleKind::Vanishing;
  s.power = power;
  return s;
}

void StepSchedule::validate() const {
  switch (kind) {
    case ScheduleKind::Constant:
      if (!(alpha > 0.0)) throw InvalidInput("schedule: constant step must be positive");
      break;
    case ScheduleKind::Warmup:
      if (!(alpha_hi >= 1.0 && alpha_lo > 0.0 && alpha_lo < 1.0)) {
        throw InvalidInput("schedule: warmup needs alpha_hi >= 1 > alpha_lo > 0");
      }
      break;
    case ScheduleKind::Vanishing:
      if (!(power > 0.0)) throw InvalidInput("schedule: vanishing power must be positive");
      if (!(alpha_cap > 0.0)) throw InvalidInput("schedule: vanishing cap must be positive");
      break;
  }
}

double StepSchedule::step(std::size_t k, double beta) const {
  switch (kind) {
    case ScheduleKind::Constant:
      return alpha;
    case ScheduleKind::Warmup:
      return k <= warmup_steps ? alpha_hi : alpha_lo;
    case ScheduleKind::Vanishing: {
      // alpha^2 = (k+1)^p beta_k^3 / beta_{k+1}^2 with beta_{k+1} = beta_k / (1 + alpha)
      // reduces to alpha / (1 + alpha) = sqrt((k+1)^p beta_k).
      const double root = std::sqrt(std::pow(static_cast<double>(k + 1), power) * beta);
      if (root >= 1.0) return alpha_cap;
      return std::min(root / (1.0 - root), alpha_cap);
    }
  }
  return alpha;
}

std::string StepSchedule::describe() const {
  std::ostringstream os;
  switch (kind) {
    case ScheduleKind::Constant:
      os << "constant(" << alpha << ")";
      break;
    case ScheduleKind::Warmup:
      os << "warmup(" << alpha_hi << "," << warmup_steps << "," << alpha_lo << ")";
      break;
    case ScheduleKind::Vanishing:
      os << "vanishing(" << power << ")";
      break;
  }
  return os.str();
}

IterateState cold_start(const GeneralizedTransportProblem& problem) {
  problem.validate();
  const std::size_t m = problem.m, n = problem.n;
  IterateState s;
  s.u.assign(problem.primal_size(), 0.0);
  const double mu_total = sum(problem.mu);
  double scale = 1.0 / mu_total;
  if (problem.r == 1) scale *= problem.a / sum(problem.nu);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) s.u[i + j * m] = problem.nu[i] * problem.mu[j] * scale;
  }
  proj_sigma(problem, s.u);
  s.v = s.u;
  s.lambda.assign(problem.dual_size(), 0.0);
  return s;
}

StepParams compute_step_params(const IterateState& state, double alpha,
                               const GeneralizedTransportProblem& problem) {
  if (!(alpha > 0.0)) throw InvalidInput("step parameters: alpha must be positive");
  if (!(state.beta > 0.0)) throw InvalidInput("step parameters: beta must be positive");
  if (state.u.size() != problem.primal_size() || state.v.size() != problem.primal_size() ||
      state.lambda.size() != problem.dual_size()) {
    throw DimensionMismatch("step parameters: iterate lengths");
  }
  StepParams sp;
  sp.alpha = alpha;
  sp.beta = state.beta;
  sp.tau = state.beta * (1.0 + alpha) / (alpha * alpha);
  sp.eta = problem.sigma + sp.tau;
  sp.beta_next = state.beta / (1.0 + alpha);

  const std::size_t mn = problem.plan_size();
  sp.w.resize(problem.primal_size());
  const double weight = state.beta / (alpha * alpha);
  for (std::size_t k = 0; k < sp.w.size(); ++k) {
    const double shifted_cost = k < mn ? problem.sigma * problem.phi[k] - problem.c[k] : 0.0;
    sp.w[k] = shifted_cost + weight * (state.u[k] + alpha * state.v[k]);
  }

  std::vector<double> hu(problem.dual_size());
  apply_h(problem, state.u, hu);
  const std::vector<double> b = problem.rhs();
  sp.lambda_tilde.resize(problem.dual_size());
  for (std::size_t k = 0; k < b.size(); ++k) {
    sp.lambda_tilde[k] = sp.beta_next * (state.lambda[k] - (hu[k] - b[k]) / state.beta) - b[k];
  }
  return sp;
}

InnerProblemView make_inner_view(const GeneralizedTransportProblem& problem,
                                 const StepParams& params) {
  InnerProblemView view;
  view.problem = &problem;
  view.beta_next = params.beta_next;
  view.eta = params.eta;
  view.tau = params.tau;
  view.w = params.w;
  view.lambda_tilde = params.lambda_tilde;
  return view;
}

void IpdConfig::validate() const {
  schedule.validate();
  ssn.validate();
  if (!(kkt_tol > 0.0)) throw InvalidInput("ipd: kkt_tol must be positive");
  if (max_outer == 0) throw InvalidInput("ipd: max_outer must be positive");
}

std::string status_name(IpdStatus status) {
  return status == IpdStatus::Converged ? "converged" : "max_outer";
}

std::string status_name(SsnStatus status) {
  switch (status) {
    case SsnStatus::Converged:
      return "converged";
    case SsnStatus::MaxIterations:
      return "max_iterations";
    case SsnStatus::LineSearchStall:
      return "line_search_stall";
  }
  return "unknown";
}

IpdResult ipd_solve(const GeneralizedTransportProblem& problem, const IpdConfig& config,
                    const IpdObserver& observer) {
  return ipd_solve(problem, config, cold_start(problem), observer);
}

IpdResult ipd_solve(const GeneralizedTransportProblem& problem, const IpdConfig& config,
                    IterateState state, const IpdObserver& observer) {
  problem.validate();
  config.validate();
  if (state.u.size() != problem.primal_size() || state.v.size() != problem.primal_size() ||
      state.lambda.size() != problem.dual_size() || !(state.beta > 0.0)) {
    throw InvalidInput("ipd: malformed starting iterate");
  }
  const NewtonLinearSolver linear =
      config.dense_linear ? dense_linear_solver() : hybrid_linear_solver(config.linear);

  IpdResult result;
  const KktResidual initial = kkt_residuals(problem, state.u, state.lambda);
  TraceRow row0;
  row0.k = state.k;
  row0.beta = state.beta;
  row0.kkt = initial;
  set_relative(row0.kkt, initial);
  result.trace.push_back(row0);
  if (observer) observer(state, nullptr);

  IterateState best = state;
  KktResidual best_kkt = row0.kkt;

  for (std::size_t iter = 0; iter < config.max_outer; ++iter) {
    const std::size_t k = state.k;
    const double alpha = config.schedule.step(k, state.beta);
    if (!(state.beta / (1.0 + alpha) > kBetaMin)) break;
    const StepParams sp = compute_step_params(state, alpha, problem);
    const InnerProblemView view = make_inner_view(problem, sp);

    SsnConfig inner = config.ssn;
    inner.tol = config.adaptive_inner_tol
                    ? std::max(state.beta / std::pow(static_cast<double>(k + 1), 2),
                               config.ssn.tol_floor)
                    : config.ssn.tol_floor;
    SsnResult ssn;
    try {
      ssn = ssn_solve(view, state.lambda, inner, linear);
    } catch (const SolverFailure& e) {
      throw SolverFailure("outer iteration " + std::to_string(k) + ": " + e.what());
    }

    std::vector<double> u_next = primal_from_dual(view, ssn.lambda);
    std::vector<double> v_next(u_next.size());
    for (std::size_t i = 0; i < u_next.size(); ++i) {
      v_next[i] = u_next[i] + (u_next[i] - state.u[i]) / alpha;
    }
    state.u = std::move(u_next);
    state.v = std::move(v_next);
    state.lambda = std::move(ssn.lambda);
    state.beta = sp.beta_next;
    state.k = k + 1;

    TraceRow row;
    row.k = state.k;
    row.alpha = alpha;
    row.beta = state.beta;
    row.kkt = kkt_residuals(problem, state.u, state.lambda);
    set_relative(row.kkt, initial);
    row.it_ssn = ssn.iterations;
    row.ssn_status = ssn.status;
    row.inner_residual = ssn.residual_norm;
    if (!ssn.linear_iterations.empty()) {
      row.it_lin_max =
          *std::max_element(ssn.linear_iterations.begin(), ssn.linear_iterations.end());
      row.it_lin_avg = static_cast<double>(std::accumulate(ssn.linear_iterations.begin(),
                                                           ssn.linear_iterations.end(),
                                                           std::size_t{0})) /
                       static_cast<double>(ssn.linear_iterations.size());
    }
    result.trace.push_back(row);
    result.total_ssn += ssn.iterations;
    if (ssn.status != SsnStatus::Converged) ++result.ssn_warnings;
    result.iterations = state.k;
    if (observer) observer(state, &result.trace.back());

    if (row.kkt.relative <= best_kkt.relative) {
      best = state;
      best_kkt = row.kkt;
    }
    if (row.kkt.relative <= config.kkt_tol) {
      result.status = IpdStatus::Converged;
      break;
    }
  }

  const IterateState& chosen = result.status == IpdStatus::Converged ? state : best;
  result.u = chosen.u;
  result.lambda = chosen.lambda;
  result.kkt = result.status == IpdStatus::Converged ? result.trace.back().kkt : best_kkt;
  result.objective = objective_h(problem, result.u);
  return result;
}

double lagrangian(const GeneralizedTransportProblem& problem, std::span<const double> u,
                  std::span<const double> lambda) {
  std::vector<double> hu(problem.dual_size());
  apply_h(problem, u, hu);
  const std::vector<double> b = problem.rhs();
  double coupling = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) coupling += lambda[k] * (hu[k] - b[k]);
  return objective_h(problem, u) + coupling;
}

double lyapunov_value(const IterateState& state, const LyapunovReference& reference,
                      const GeneralizedTransportProblem& problem) {
  if (reference.u_star.size() != problem.primal_size() ||
      reference.lambda_star.size() != problem.dual_size()) {
    throw DimensionMismatch("lyapunov: reference lengths");
  }
  for (std::size_t k = 0; k < reference.u_star.size(); ++k) {
    const double v = reference.u_star[k];
    const double slack = 1e-9 * (1.0 + std::abs(v));
    if (v < problem.lower_bound(k) - slack || v > problem.upper_bound(k) + slack) {
      throw InvalidInput("lyapunov: reference point outside the feasible box");
    }
  }
  const double gap = lagrangian(problem, state.u, reference.lambda_star) -
                     lagrangian(problem, reference.u_star, state.lambda);
  const std::vector<double> dv = subtract(state.v, reference.u_star);
  const std::vector<double> dl = subtract(state.lambda, reference.lambda_star);
  return gap + 0.5 * state.beta * (dot(dv, dv) + dot(dl, dl));
}

}  // namespace transolve
