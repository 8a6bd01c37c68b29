#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "support/instances.hpp"
#include "transolve/error.hpp"
#include "transolve/ipd.hpp"
#include "transolve/oracle.hpp"
#include "transolve/vector_ops.hpp"

using namespace transolve;

namespace {

double feasibility(const GeneralizedTransportProblem& p, const std::vector<double>& u) {
  std::vector<double> hu(p.dual_size());
  apply_h(p, u, hu);
  return norm2(subtract(hu, p.rhs()));
}

bool in_box(const GeneralizedTransportProblem& p, const std::vector<double>& u) {
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] < p.lower_bound(k) || u[k] > p.upper_bound(k)) return false;
  }
  return true;
}

GeneralizedTransportProblem assignment(std::size_t n, std::uint64_t seed) {
  const DenseMatrix c = gen_cost(CostKind::Random, n, seed);
  const std::vector<double> marg(n, 1.0 / static_cast<double>(n));
  return build_optimal_transport(c, marg, marg);
}

IpdConfig exact_config(const StepSchedule& schedule) {
  IpdConfig c;
  c.schedule = schedule;
  c.adaptive_inner_tol = false;
  c.ssn.tol_floor = 1e-12;
  c.ssn.j_max = 200;
  c.dense_linear = true;
  return c;
}

}  // namespace

TEST_SUITE("ipd") {
  TEST_CASE("step parameters at unit values") {
    const std::vector<double> one{1.0};
    const auto p = build_optimal_transport(DenseMatrix(1, 1, 0.25), one, one);
    IterateState s;
    s.u.assign(p.primal_size(), 0.0);
    s.v = s.u;
    s.lambda.assign(p.dual_size(), 0.0);
    const StepParams sp = compute_step_params(s, 1.0, p);
    CHECK(sp.tau == 2.0);
    CHECK(sp.eta == 2.0);
    CHECK(sp.beta_next == 0.5);
    CHECK(sp.w[0] == -0.25);
    for (double v : sp.lambda_tilde) CHECK(v == -0.5);
    CHECK_THROWS_AS(compute_step_params(s, 0.0, p), InvalidInput);
    CHECK_THROWS_AS(compute_step_params(s, -1.0, p), InvalidInput);
  }

  TEST_CASE("schedules") {
    const StepSchedule c = StepSchedule::constant(0.5);
    CHECK(c.step(0, 1.0) == 0.5);
    CHECK(c.step(77, 1e-9) == 0.5);
    const StepSchedule w = StepSchedule::warmup(10, 10, 0.5);
    CHECK(w.step(3, 1.0) == 10.0);
    CHECK(w.step(10, 1.0) == 10.0);
    CHECK(w.step(11, 1.0) == 0.5);
    CHECK_THROWS_AS(StepSchedule::warmup(0.5, 10, 0.5).validate(), InvalidInput);
    CHECK_THROWS_AS(StepSchedule::constant(0.0).validate(), InvalidInput);
    CHECK_THROWS_AS(StepSchedule::vanishing(0.0).validate(), InvalidInput);
  }

  TEST_CASE("vanishing schedule gives beta of order (k+1)^-(2+p)") {
    for (double power : {0.5, 1.0, 2.0}) {
      const StepSchedule s = StepSchedule::vanishing(power);
      double beta = 1.0;
      double lo = 1e300, hi = 0.0;
      for (std::size_t k = 0; k < 200; ++k) {
        const double alpha = s.step(k, beta);
        CHECK(alpha > 0.0);
        // alpha^2 = (k+1)^p beta_k^3 / beta_{k+1}^2 once below the cap
        const double next = beta / (1.0 + alpha);
        if (alpha < s.alpha_cap) {
          const double lhs = alpha * alpha;
          const double rhs = std::pow(static_cast<double>(k + 1), power) * beta * beta * beta / (next * next);
          CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
        beta = next;
        if (k >= 50) {
          const double scaled = beta * std::pow(static_cast<double>(k + 2), 2.0 + power);
          lo = std::min(lo, scaled);
          hi = std::max(hi, scaled);
        }
      }
      CHECK(hi / lo < 2.0);
    }
  }

  TEST_CASE("cold start is feasible for balanced and partial problems") {
    std::mt19937_64 rng(1);
    const auto ot = testsupport::random_ot(5, 7, rng);
    const IterateState s = cold_start(ot);
    CHECK(feasibility(ot, s.u) < 1e-14);
    CHECK(s.beta == 1.0);
    for (double v : s.lambda) CHECK(v == 0.0);
    const auto part = testsupport::random_partial(4, 6, 0.5, rng);
    const IterateState t = cold_start(part);
    double mass = 0.0;
    for (std::size_t k = 0; k < part.plan_size(); ++k) mass += t.u[k];
    CHECK(mass == doctest::Approx(part.a));
    CHECK(in_box(part, t.u));
  }

  TEST_CASE("beta follows the product of step factors for 1000 steps") {
    std::mt19937_64 rng(2);
    const auto p = testsupport::random_ot(2, 2, rng);
    IpdConfig c;
    c.schedule = StepSchedule::constant(0.02);
    c.kkt_tol = 1e-300;
    c.max_outer = 1000;
    const IpdResult r = ipd_solve(p, c);
    REQUIRE(r.trace.size() == 1001);
    double product = 1.0;
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
      product /= 1.0 + r.trace[k].alpha;
      CHECK(r.trace[k].beta == doctest::Approx(product).epsilon(1e-12));
    }
  }

  TEST_CASE("every iterate satisfies the box and cone constraints") {
    std::mt19937_64 rng(3);
    const auto p = testsupport::random_partial(6, 5, 0.7, rng);
    IpdConfig c;
    c.schedule = StepSchedule::constant(0.5);
    std::size_t seen = 0;
    const IpdResult r = ipd_solve(p, c, [&](const IterateState& s, const TraceRow*) {
      CHECK(in_box(p, s.u));
      ++seen;
    });
    CHECK(seen == r.iterations + 1);
    CHECK(r.status == IpdStatus::Converged);
  }

  TEST_CASE("doubly stochastic anchor converges almost at once") {
    const std::size_t n = 5;
    DenseMatrix phi(n, n);
    std::mt19937_64 rng(4);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (int layer = 0; layer < 3; ++layer) {
      std::shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t i = 0; i < n; ++i) phi(i, perm[i]) += 1.0 / 3.0;
    }
    const auto p = build_birkhoff_projection(phi);
    IpdConfig c;
    c.kkt_tol = 1e-10;
    // the cold start is feasible with lambda = 0 exact, so x_k - phi
    // contracts by tau_k / (sigma + tau_k) per step
    const IpdResult r = ipd_solve(p, c);
    CHECK(r.status == IpdStatus::Converged);
    CHECK(r.iterations <= 5);
    for (std::size_t k = 0; k < p.plan_size(); ++k) CHECK(r.u[k] == doctest::Approx(p.phi[k]).epsilon(1e-8));

    IterateState anchor = cold_start(p);
    std::copy(p.phi.begin(), p.phi.end(), anchor.u.begin());
    anchor.v = anchor.u;
    const IpdResult warm = ipd_solve(p, c, anchor);
    CHECK(warm.status == IpdStatus::Converged);
    CHECK(warm.iterations == 1);
    CHECK(warm.kkt.res_x + warm.kkt.res_lambda <= 1e-14);
  }

  TEST_CASE("assignment with the default warmup schedule matches enumeration") {
    const auto p = assignment(4, 5);
    IpdConfig c;
    c.schedule = StepSchedule::warmup(10, 10, 0.5);
    const IpdResult r = ipd_solve(p, c);
    CHECK(r.status == IpdStatus::Converged);
    CHECK(std::abs(r.objective - solve_oracle(p).objective) <= 1e-6);
  }

  TEST_CASE("Birkhoff projection at desk scale") {
    const auto p = generate_instance(InstanceKind::Birkhoff, 200, 7);
    IpdConfig c;
    c.schedule = StepSchedule::constant(10.0);
    const IpdResult r = ipd_solve(p, c);
    CHECK(r.status == IpdStatus::Converged);
    CHECK(r.iterations <= 20);
    CHECK(r.kkt.relative <= 1e-6);
  }

  TEST_CASE("feasibility violation is beta times a bounded dual drift") {
    std::mt19937_64 rng(5);
    const auto p = testsupport::random_ot(8, 8, rng);
    IpdConfig c = exact_config(StepSchedule::constant(0.5));
    c.kkt_tol = 1e-7;
    std::vector<double> viol, betas;
    std::vector<std::vector<double>> residuals, lambdas;
    std::vector<double> drift_error{0.0};
    const IpdResult r = ipd_solve(p, c, [&](const IterateState& s, const TraceRow* row) {
      if (row) drift_error.push_back(drift_error.back() + row->inner_residual / s.beta);
      viol.push_back(feasibility(p, s.u));
      betas.push_back(s.beta);
      std::vector<double> hu(p.dual_size());
      apply_h(p, s.u, hu);
      std::vector<double> scaled = subtract(hu, p.rhs());
      for (double& x : scaled) x /= s.beta;
      residuals.push_back(std::move(scaled));
      lambdas.push_back(s.lambda);
    });
    REQUIRE(r.status == IpdStatus::Converged);
    REQUIRE(viol.size() > 6);
    // inner solves telescope: (H u_k - b) / beta_k = (H u_0 - b) / beta_0 + lambda_k - lambda_0
    // up to the sum of |F_j| / beta_j
    for (std::size_t k = 0; k < residuals.size(); ++k) {
      std::vector<double> predicted = residuals.front();
      axpy(1.0, lambdas[k], predicted);
      axpy(-1.0, lambdas.front(), predicted);
      const double slack = 1.01 * drift_error[k] + 1e-9;
      CHECK(norm2(subtract(residuals[k], predicted)) <= slack);
      CHECK(viol[k] <= betas[k] * (norm2(predicted) + slack));
    }
  }

  TEST_CASE("Lyapunov function") {
    // strongly convex objective: a 1e-12 reference is attainable in double precision
    std::mt19937_64 rng(6);
    const auto p = testsupport::random_birkhoff(5, rng);
    IpdConfig ref_cfg = exact_config(StepSchedule::constant(1.0));
    ref_cfg.kkt_tol = 1e-12;
    ref_cfg.max_outer = 2000;
    const IpdResult ref = ipd_solve(p, ref_cfg);
    REQUIRE(ref.status == IpdStatus::Converged);
    LyapunovReference star{ref.u, ref.lambda};

    IterateState at_star;
    at_star.beta = 0.3;
    at_star.u = ref.u;
    at_star.v = ref.u;
    at_star.lambda = ref.lambda;
    CHECK(std::abs(lyapunov_value(at_star, star, p)) < 1e-12);

    IpdConfig c = exact_config(StepSchedule::constant(1.0));
    c.kkt_tol = 1e-300;
    c.max_outer = 30;
    std::vector<double> values, alphas;
    ipd_solve(p, c, [&](const IterateState& s, const TraceRow* row) {
      values.push_back(lyapunov_value(s, star, p));
      if (row) alphas.push_back(row->alpha);
    });
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      CHECK(values[k] >= -1e-10);
      CHECK(values[k + 1] <= values[k] / (1.0 + alphas[k]) + 1e-8 * (1.0 + values[k]));
    }

    LyapunovReference outside = star;
    outside.u_star[0] = -1.0;
    CHECK_THROWS_AS(lyapunov_value(at_star, outside, p), InvalidInput);
  }

  TEST_CASE("max outer status returns the best iterate") {
    std::mt19937_64 rng(7);
    const auto p = testsupport::random_ot(6, 6, rng);
    IpdConfig c;
    c.schedule = StepSchedule::constant(0.5);
    c.max_outer = 3;
    const IpdResult r = ipd_solve(p, c);
    CHECK(r.status == IpdStatus::MaxOuter);
    CHECK(r.iterations == 3);
    double best = 1e300;
    for (std::size_t k = 1; k < r.trace.size(); ++k) best = std::min(best, r.trace[k].kkt.relative);
    CHECK(r.kkt.relative == best);
  }

  TEST_CASE("malformed starting iterate is rejected") {
    std::mt19937_64 rng(8);
    const auto p = testsupport::random_ot(3, 3, rng);
    IterateState s = cold_start(p);
    s.lambda.pop_back();
    CHECK_THROWS_AS(ipd_solve(p, IpdConfig{}, s), InvalidInput);
  }
}
