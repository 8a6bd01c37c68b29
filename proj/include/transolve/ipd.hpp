#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "transolve/problem.hpp"
#include "transolve/reduction.hpp"
#include "transolve/ssn.hpp"

namespace transolve {

enum class ScheduleKind { Constant, Warmup, Vanishing };

struct StepSchedule {
  ScheduleKind kind = ScheduleKind::Warmup;
  double alpha = 1.0;     // Constant
  double alpha_hi = 10.0;  // Warmup: used for k <= warmup_steps
  std::size_t warmup_steps = 10;
  double alpha_lo = 0.5;
  double power = 1.0;       // Vanishing
  double alpha_cap = 10.0;  // Vanishing: bound while (k+1)^p beta_k >= 1

  static StepSchedule constant(double alpha);
  static StepSchedule warmup(double alpha_hi, std::size_t warmup_steps, double alpha_lo);
  static StepSchedule vanishing(double power);

  void validate() const;
  // Step size for iteration k at the current beta (only Vanishing reads beta).
  double step(std::size_t k, double beta) const;
  std::string describe() const;
};

struct IterateState {
  std::size_t k = 0;
  double beta = 1.0;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> lambda;
};

// x0 = vec(nu mu^T) / sum(mu), rescaled to total mass a when a mass row is
// present and clamped to the bounds; zero slacks, lambda0 = 0, beta0 = 1.
IterateState cold_start(const GeneralizedTransportProblem& problem);

struct StepParams {
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;
  double eta = 0.0;
  double beta_next = 0.0;
  std::vector<double> w;
  std::vector<double> lambda_tilde;
};

StepParams compute_step_params(const IterateState& state, double alpha,
                               const GeneralizedTransportProblem& problem);

InnerProblemView make_inner_view(const GeneralizedTransportProblem& problem,
                                 const StepParams& params);

// The loop stops with MaxOuter before beta would drop below this value.
inline constexpr double kBetaMin = 1e-250;

struct IpdConfig {
  StepSchedule schedule;
  double kkt_tol = 1e-6;
  std::size_t max_outer = 500;
  SsnConfig ssn;
  // Inner tolerance max(beta_k (k+1)^-2, ssn.tol_floor); when false,
  // ssn.tol_floor alone.
  bool adaptive_inner_tol = true;
  // Dense factorization of every Newton system instead of the hybrid solver.
  bool dense_linear = false;
  HybridPolicy linear;
  void validate() const;
};

struct TraceRow {
  std::size_t k = 0;
  double alpha = 0.0;
  double beta = 1.0;
  KktResidual kkt;
  std::size_t it_ssn = 0;
  std::size_t it_lin_max = 0;
  double it_lin_avg = 0.0;
  double inner_residual = 0.0;
  SsnStatus ssn_status = SsnStatus::Converged;
};

enum class IpdStatus { Converged, MaxOuter };

std::string status_name(IpdStatus status);
std::string status_name(SsnStatus status);

struct IpdResult {
  IpdStatus status = IpdStatus::MaxOuter;
  std::vector<double> u;
  std::vector<double> lambda;
  std::size_t iterations = 0;
  KktResidual kkt;  // at the returned iterate
  // Row 0 holds the initial residuals; row k the state after iteration k.
  std::vector<TraceRow> trace;
  std::size_t total_ssn = 0;
  std::size_t ssn_warnings = 0;
  double objective = 0.0;
};

// Called with the initial state (row = nullptr) and after every iteration.
using IpdObserver = std::function<void(const IterateState&, const TraceRow*)>;

IpdResult ipd_solve(const GeneralizedTransportProblem& problem, const IpdConfig& config,
                    const IpdObserver& observer = {});
IpdResult ipd_solve(const GeneralizedTransportProblem& problem, const IpdConfig& config,
                    IterateState start, const IpdObserver& observer = {});

struct LyapunovReference {
  std::vector<double> u_star;
  std::vector<double> lambda_star;
};

// L(u, lambda) = h(x) + <lambda, H u - b> for u in the feasible box.
double lagrangian(const GeneralizedTransportProblem& problem, std::span<const double> u,
                  std::span<const double> lambda);

// L(u_k, lambda*) - L(u*, lambda_k) + beta_k/2 (|v_k - u*|^2 + |lambda_k - lambda*|^2)
double lyapunov_value(const IterateState& state, const LyapunovReference& reference,
                      const GeneralizedTransportProblem& problem);

}  // namespace transolve
