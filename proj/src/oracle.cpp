#include "transolve/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "transolve/error.hpp"
#include "transolve/vector_ops.hpp"

namespace transolve {

namespace {

bool all_equal(const std::vector<double>& v, double value) {
  return std::all_of(v.begin(), v.end(),
                     [value](double x) { return std::abs(x - value) <= 1e-12 * std::abs(value); });
}

bool is_linear_transport(const GeneralizedTransportProblem& p) {
  if (p.sigma != 0.0 || p.r != 0 || p.cone_y != ConeKind::Zero || p.cone_z != ConeKind::Zero) {
    return false;
  }
  for (std::size_t k = 0; k < p.plan_size(); ++k) {
    if (p.lower[k] != 0.0 || !is_unbounded(p.upper[k])) return false;
  }
  const double smu = sum(p.mu);
  const double snu = sum(p.nu);
  return std::abs(smu - snu) <= 1e-12 * std::max({1.0, smu, snu});
}

bool is_assignment_form(const GeneralizedTransportProblem& p) {
  return is_linear_transport(p) && p.m == p.n && p.n > 0 && all_equal(p.mu, p.mu[0]) &&
         all_equal(p.nu, p.mu[0]);
}

bool is_unit_projection_form(const GeneralizedTransportProblem& p) {
  return p.m == p.n && p.r == 0 && p.cone_y == ConeKind::Zero && p.cone_z == ConeKind::Zero &&
         all_equal(p.mu, 1.0) && all_equal(p.nu, 1.0);
}

// Solves a (square, row-major) system by Gaussian elimination with partial
// pivoting; false when a pivot falls below the threshold.
bool solve_square(std::vector<double> a, std::vector<double>& b, std::size_t k) {
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r) {
      if (std::abs(a[r * k + col]) > std::abs(a[piv * k + col])) piv = r;
    }
    if (std::abs(a[piv * k + col]) < 1e-12) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < k; ++c) std::swap(a[piv * k + c], a[col * k + c]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < k; ++r) {
      const double f = a[r * k + col] / a[col * k + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < k; ++c) a[r * k + c] -= f * a[col * k + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t r = k; r-- > 0;) {
    double acc = b[r];
    for (std::size_t c = r + 1; c < k; ++c) acc -= a[r * k + c] * b[c];
    b[r] = acc / a[r * k + r];
  }
  return true;
}

}  // namespace

std::string oracle_kind_name(OracleKind kind) {
  switch (kind) {
    case OracleKind::Assignment:
      return "assignment";
    case OracleKind::TinyTransport:
      return "tiny_transport";
    case OracleKind::Birkhoff:
      return "birkhoff";
  }
  return "unknown";
}

OracleResult assignment_oracle(const GeneralizedTransportProblem& p) {
  p.validate();
  if (!is_assignment_form(p)) throw InvalidInput("oracle: not an assignment-form problem");
  const std::size_t n = p.n;
  if (n > kAssignmentMax) throw InvalidInput("oracle: assignment size cap exceeded");
  const double mass = p.mu[0];
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  OracleResult out;
  out.kind = OracleKind::Assignment;
  do {
    double cost = 0.0;
    for (std::size_t j = 0; j < n; ++j) cost += p.c[p.vec_index(perm[j], j)];
    ++out.candidates;
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  out.plan.assign(p.plan_size(), 0.0);
  for (std::size_t j = 0; j < n; ++j) out.plan[p.vec_index(best[j], j)] = mass;
  out.objective = objective_h(p, out.plan);
  return out;
}

OracleResult tiny_transport_oracle(const GeneralizedTransportProblem& p) {
  p.validate();
  if (!is_linear_transport(p)) throw InvalidInput("oracle: not a balanced linear transport problem");
  const std::size_t m = p.m, n = p.n;
  if (m > kTinyTransportMax || n > kTinyTransportMax) {
    throw InvalidInput("oracle: tiny transport size cap exceeded");
  }
  const std::size_t mn = m * n;
  // Column constraints, then all row constraints except the last (implied).
  const std::size_t k = m + n - 1;
  std::vector<double> rhs(k);
  for (std::size_t j = 0; j < n; ++j) rhs[j] = p.mu[j];
  for (std::size_t i = 0; i + 1 < m; ++i) rhs[n + i] = p.nu[i];
  const double scale = std::max(1.0, sum(p.mu));

  OracleResult out;
  out.kind = OracleKind::TinyTransport;
  double best = std::numeric_limits<double>::infinity();
  std::vector<char> pick(mn, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), 1);
  std::vector<double> plan(mn);
  do {
    std::vector<std::size_t> support;
    for (std::size_t e = 0; e < mn; ++e) {
      if (pick[e]) support.push_back(e);
    }
    std::vector<double> a(k * k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t i = support[c] % m;
      const std::size_t j = support[c] / m;
      a[j * k + c] = 1.0;
      if (i + 1 < m) a[(n + i) * k + c] = 1.0;
    }
    std::vector<double> x = rhs;
    ++out.candidates;
    if (!solve_square(std::move(a), x, k)) continue;
    if (*std::min_element(x.begin(), x.end()) < -1e-12 * scale) continue;
    std::fill(plan.begin(), plan.end(), 0.0);
    for (std::size_t c = 0; c < k; ++c) plan[support[c]] = std::max(x[c], 0.0);
    double violation = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += plan[p.vec_index(i, j)];
      violation = std::max(violation, std::abs(row - p.nu[i]));
    }
    if (violation > 1e-10 * scale) continue;
    const double value = objective_h(p, plan);
    if (value < best) {
      best = value;
      out.plan = plan;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  if (out.plan.empty()) throw SolverFailure("oracle: no feasible support found");
  out.objective = best;
  return out;
}

OracleResult birkhoff_oracle(const GeneralizedTransportProblem& p) {
  p.validate();
  if (!is_unit_projection_form(p)) throw InvalidInput("oracle: not a unit-marginal projection problem");
  if (p.n > kBirkhoffMax) throw InvalidInput("oracle: Birkhoff size cap exceeded");
  OracleResult out;
  out.kind = OracleKind::Birkhoff;
  out.candidates = 1;
  if (p.n == 1) {
    out.plan = {1.0};
    if (p.lower[0] > 1.0 || p.upper[0] < 1.0) throw InvalidInput("oracle: infeasible bounds");
    out.objective = objective_h(p, out.plan);
    return out;
  }
  // Plans [[t, 1 - t], [1 - t, t]] = base + t * dir in vec order.
  const std::vector<double> base{0.0, 1.0, 1.0, 0.0};
  const std::vector<double> dir{1.0, -1.0, -1.0, 1.0};
  double t_lo = 0.0, t_hi = 1.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double lo = (p.lower[k] - base[k]) / dir[k];
    const double hi = is_unbounded(p.upper[k]) ? (dir[k] > 0 ? 1.0 : 0.0)
                                               : (p.upper[k] - base[k]) / dir[k];
    t_lo = std::max(t_lo, std::min(lo, hi));
    t_hi = std::min(t_hi, std::max(lo, hi));
  }
  if (t_lo > t_hi + 1e-12) throw InvalidInput("oracle: infeasible bounds");
  t_hi = std::max(t_hi, t_lo);
  // objective(base + t dir) = quad t^2 + lin t + const
  double quad = 0.0, lin = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    quad += 0.5 * p.sigma * dir[k] * dir[k];
    lin += p.sigma * dir[k] * (base[k] - p.phi[k]) + p.c[k] * dir[k];
  }
  auto plan_at = [&](double t) {
    std::vector<double> x(4);
    for (std::size_t k = 0; k < 4; ++k) x[k] = base[k] + t * dir[k];
    return x;
  };
  double t = 0.0;
  if (quad > 0.0) {
    t = std::clamp(-lin / (2.0 * quad), t_lo, t_hi);
  } else {
    t = objective_h(p, plan_at(t_lo)) <= objective_h(p, plan_at(t_hi)) ? t_lo : t_hi;
  }
  out.plan = plan_at(t);
  out.objective = objective_h(p, out.plan);
  return out;
}

OracleResult solve_oracle(const GeneralizedTransportProblem& p) {
  p.validate();
  if (is_assignment_form(p) && p.n <= kAssignmentMax) return assignment_oracle(p);
  if (is_linear_transport(p) && p.m <= kTinyTransportMax && p.n <= kTinyTransportMax) {
    return tiny_transport_oracle(p);
  }
  if (is_unit_projection_form(p) && p.n <= kBirkhoffMax) return birkhoff_oracle(p);
  throw InvalidInput("oracle: problem form or size outside the brute-force caps");
}

}  // namespace transolve
