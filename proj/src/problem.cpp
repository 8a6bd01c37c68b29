#include "transolve/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <utility>

#include "transolve/error.hpp"
#include "transolve/vector_ops.hpp"

namespace transolve {

double GeneralizedTransportProblem::lower_bound(std::size_t k) const {
  return k < plan_size() ? lower[k] : 0.0;
}

double GeneralizedTransportProblem::upper_bound(std::size_t k) const {
  const std::size_t mn = plan_size();
  if (k < mn) return upper[k];
  const ConeKind kind = k < mn + n ? cone_y : cone_z;
  return kind == ConeKind::Zero ? 0.0 : kUnbounded;
}

std::vector<double> GeneralizedTransportProblem::rhs() const {
  std::vector<double> b;
  b.reserve(dual_size());
  b.insert(b.end(), mu.begin(), mu.end());
  b.insert(b.end(), nu.begin(), nu.end());
  if (r == 1) b.push_back(a);
  return b;
}

void GeneralizedTransportProblem::validate() const {
  const std::size_t mn = plan_size();
  if (m == 0 || n == 0) throw InvalidInput("problem: empty plan dimensions");
  if (r > 1) throw InvalidInput("problem: at most one total-mass row is supported");
  if (c.size() != mn || phi.size() != mn || lower.size() != mn || upper.size() != mn) {
    throw DimensionMismatch("problem: cost/anchor/bound length must be m*n");
  }
  if (mu.size() != n || nu.size() != m) {
    throw DimensionMismatch("problem: mu must have length n and nu length m");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("problem: sigma must be >= 0");
  for (std::size_t k = 0; k < mn; ++k) {
    if (!std::isfinite(c[k])) throw InvalidInput("problem: cost entries must be finite");
    if (!(lower[k] >= 0.0) || !std::isfinite(lower[k])) {
      throw InvalidInput("problem: lower bounds must be finite and nonnegative");
    }
    if (!(upper[k] >= lower[k])) throw InvalidInput("problem: upper bound below lower bound");
    if (sigma > 0.0 && !(phi[k] >= 0.0)) {
      throw InvalidInput("problem: anchor must be nonnegative when sigma > 0");
    }
  }
  for (double v : mu) {
    if (!(v >= 0.0)) throw InvalidInput("problem: mu must be nonnegative");
  }
  for (double v : nu) {
    if (!(v >= 0.0)) throw InvalidInput("problem: nu must be nonnegative");
  }
  if (r == 1) {
    const double amax = std::min(sum(mu), sum(nu));
    if (!(a > 0.0) || a > amax * (1.0 + 1e-12)) {
      throw InvalidInput("problem: total mass must lie in (0, min(sum mu, sum nu)]");
    }
  }
}

namespace {

void check_marginals(std::span<const double> mu, std::span<const double> nu) {
  for (double v : mu) {
    if (!(v >= 0.0)) throw InvalidInput("marginal mu has a negative entry");
  }
  for (double v : nu) {
    if (!(v >= 0.0)) throw InvalidInput("marginal nu has a negative entry");
  }
}

std::vector<double> vec_of(const DenseMatrix& mat) {
  std::vector<double> v(mat.rows() * mat.cols());
  for (std::size_t j = 0; j < mat.cols(); ++j) {
    for (std::size_t i = 0; i < mat.rows(); ++i) v[i + j * mat.rows()] = mat(i, j);
  }
  return v;
}

GeneralizedTransportProblem base_problem(const DenseMatrix& cost, std::span<const double> mu,
                                         std::span<const double> nu) {
  if (cost.cols() != mu.size() || cost.rows() != nu.size()) {
    throw DimensionMismatch("cost must be m x n with mu of length n and nu of length m");
  }
  GeneralizedTransportProblem p;
  p.m = cost.rows();
  p.n = cost.cols();
  p.c = vec_of(cost);
  p.phi.assign(p.plan_size(), 0.0);
  p.lower.assign(p.plan_size(), 0.0);
  p.upper.assign(p.plan_size(), kUnbounded);
  p.mu.assign(mu.begin(), mu.end());
  p.nu.assign(nu.begin(), nu.end());
  return p;
}

}  // namespace

GeneralizedTransportProblem build_optimal_transport(const DenseMatrix& cost,
                                                    std::span<const double> mu,
                                                    std::span<const double> nu) {
  check_marginals(mu, nu);
  const double smu = sum(mu);
  const double snu = sum(nu);
  if (std::abs(smu - snu) > 1e-12 * std::max({1.0, smu, snu})) {
    throw InvalidInput("mass imbalance: sum(mu) != sum(nu)");
  }
  GeneralizedTransportProblem p = base_problem(cost, mu, nu);
  p.validate();
  return p;
}

GeneralizedTransportProblem build_birkhoff_projection(const DenseMatrix& phi,
                                                      std::span<const FixedEntry> fixed) {
  const std::size_t n = phi.rows();
  if (phi.cols() != n) throw DimensionMismatch("Birkhoff anchor must be square");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(phi(i, j) >= 0.0)) throw InvalidInput("Birkhoff anchor must be nonnegative");
    }
  }
  const std::vector<double> ones(n, 1.0);
  GeneralizedTransportProblem p = base_problem(DenseMatrix(n, n), ones, ones);
  p.sigma = 1.0;
  p.phi = vec_of(phi);
  for (const FixedEntry& e : fixed) {
    if (e.row >= n || e.col >= n) throw InvalidInput("fixed entry index out of bounds");
    if (!(e.value >= 0.0 && e.value <= 1.0)) {
      throw InvalidInput("fixed entry value must lie in [0, 1]");
    }
    const std::size_t k = p.vec_index(e.row, e.col);
    p.lower[k] = e.value;
    p.upper[k] = e.value;
  }
  p.validate();
  return p;
}

GeneralizedTransportProblem build_partial_transport(const DenseMatrix& cost,
                                                    std::span<const double> mu,
                                                    std::span<const double> nu, double a) {
  check_marginals(mu, nu);
  const double amax = std::min(sum(mu), sum(nu));
  if (!(a > 0.0) || a > amax * (1.0 + 1e-12)) {
    throw InvalidInput("infeasible mass fraction: a must lie in (0, min(sum mu, sum nu)]");
  }
  GeneralizedTransportProblem p = base_problem(cost, mu, nu);
  p.r = 1;
  p.a = std::min(a, amax);
  p.cone_y = ConeKind::NonNegative;
  p.cone_z = ConeKind::NonNegative;
  p.validate();
  return p;
}

DenseMatrix gen_cost(CostKind kind, std::size_t n, std::uint64_t seed) {
  DenseMatrix cost(n, n);
  if (kind == CostKind::Random) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) cost(i, j) = unif(rng);
    }
    return cost;
  }
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side != n) throw InvalidInput("quadratic distance cost needs a perfect-square n");
  const double h = side > 1 ? 1.0 / static_cast<double>(side - 1) : 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double px = h * static_cast<double>(p % side);
    const double py = h * static_cast<double>(p / side);
    for (std::size_t q = 0; q < n; ++q) {
      const double dx = px - h * static_cast<double>(q % side);
      const double dy = py - h * static_cast<double>(q / side);
      cost(p, q) = dx * dx + dy * dy;
    }
  }
  return cost;
}

void apply_h(const GeneralizedTransportProblem& p, std::span<const double> u,
             std::span<double> out) {
  const std::size_t m = p.m, n = p.n, mn = p.plan_size();
  if (u.size() != p.primal_size() || out.size() != p.dual_size()) {
    throw DimensionMismatch("apply_h: expected u of length m*n+n+m");
  }
  std::fill(out.begin(), out.end(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double* col = u.data() + j * m;
    double cs = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      cs += col[i];
      out[n + i] += col[i];
    }
    out[j] = cs;
    total += cs;
  }
  for (std::size_t j = 0; j < n; ++j) out[j] += u[mn + j];
  for (std::size_t i = 0; i < m; ++i) out[n + i] += u[mn + n + i];
  if (p.r == 1) out[n + m] = total;
}

void apply_ht(const GeneralizedTransportProblem& p, std::span<const double> lambda,
              std::span<double> out) {
  const std::size_t m = p.m, n = p.n, mn = p.plan_size();
  if (lambda.size() != p.dual_size() || out.size() != p.primal_size()) {
    throw DimensionMismatch("apply_ht: expected lambda of length n+m+r");
  }
  const double mass = p.r == 1 ? lambda[n + m] : 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double cj = lambda[j] + mass;
    double* col = out.data() + j * m;
    for (std::size_t i = 0; i < m; ++i) col[i] = cj + lambda[n + i];
  }
  for (std::size_t j = 0; j < n; ++j) out[mn + j] = lambda[j];
  for (std::size_t i = 0; i < m; ++i) out[mn + n + i] = lambda[n + i];
}

std::vector<double> apply_constraint_operator(const GeneralizedTransportProblem& p,
                                              Direction direction, std::span<const double> v) {
  if (direction == Direction::Forward) {
    std::vector<double> out(p.dual_size());
    apply_h(p, v, out);
    return out;
  }
  std::vector<double> out(p.primal_size());
  apply_ht(p, v, out);
  return out;
}

double objective_h(const GeneralizedTransportProblem& p, std::span<const double> x) {
  if (x.size() < p.plan_size()) throw DimensionMismatch("objective_h: x too short");
  double quad = 0.0;
  double lin = 0.0;
  for (std::size_t k = 0; k < p.plan_size(); ++k) {
    const double d = x[k] - p.phi[k];
    quad += d * d;
    lin += p.c[k] * x[k];
  }
  return 0.5 * p.sigma * quad + lin;
}

std::vector<double> proj_box(std::span<const double> v, std::span<const double> lower,
                             std::span<const double> upper) {
  if (lower.size() != v.size() || upper.size() != v.size()) {
    throw DimensionMismatch("proj_box: bound lengths differ from input");
  }
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::clamp(v[k], lower[k], upper[k]);
  return out;
}

std::vector<double> proj_cone(std::span<const double> v, ConeKind kind) {
  std::vector<double> out(v.size(), 0.0);
  if (kind == ConeKind::NonNegative) {
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::max(v[k], 0.0);
  }
  return out;
}

void proj_sigma(const GeneralizedTransportProblem& p, std::span<double> u) {
  if (u.size() != p.primal_size()) throw DimensionMismatch("proj_sigma: bad length");
  const std::size_t mn = p.plan_size();
  for (std::size_t k = 0; k < mn; ++k) u[k] = std::clamp(u[k], p.lower[k], p.upper[k]);
  for (std::size_t k = mn; k < u.size(); ++k) {
    const ConeKind kind = k < mn + p.n ? p.cone_y : p.cone_z;
    u[k] = kind == ConeKind::Zero ? 0.0 : std::max(u[k], 0.0);
  }
}

KktResidual kkt_residuals(const GeneralizedTransportProblem& p, std::span<const double> u,
                          std::span<const double> lambda) {
  const std::size_t mn = p.plan_size(), n = p.n;
  std::vector<double> ht(p.primal_size());
  apply_ht(p, lambda, ht);

  KktResidual res;
  double acc = 0.0;
  for (std::size_t k = 0; k < mn; ++k) {
    const double arg = p.sigma * p.phi[k] + (1.0 - p.sigma) * u[k] - p.c[k] - ht[k];
    const double d = u[k] - std::clamp(arg, p.lower[k], p.upper[k]);
    acc += d * d;
  }
  res.res_x = std::sqrt(acc);

  auto cone_res = [&](std::size_t begin, std::size_t len, ConeKind kind) {
    double s = 0.0;
    for (std::size_t k = begin; k < begin + len; ++k) {
      const double arg = u[k] - ht[k];
      const double proj = kind == ConeKind::Zero ? 0.0 : std::max(arg, 0.0);
      s += (u[k] - proj) * (u[k] - proj);
    }
    return std::sqrt(s);
  };
  res.res_y = cone_res(mn, n, p.cone_y);
  res.res_z = cone_res(mn + n, p.m, p.cone_z);

  std::vector<double> hu(p.dual_size());
  apply_h(p, u, hu);
  const std::vector<double> b = p.rhs();
  res.res_lambda = norm2(subtract(hu, b));
  return res;
}

void set_relative(KktResidual& current, const KktResidual& initial) {
  const double largest = std::max(
      {initial.res_x, initial.res_y, initial.res_z, initial.res_lambda, kKktFloor});
  auto ratio = [&](double v, double v0) {
    const double denom = v0 > kKktZeroRatio * largest ? v0 : largest;
    return v / std::max(denom, kKktFloor);
  };
  current.relative = std::max({ratio(current.res_x, initial.res_x),
                               ratio(current.res_y, initial.res_y),
                               ratio(current.res_z, initial.res_z),
                               ratio(current.res_lambda, initial.res_lambda)});
}

InstanceKind parse_instance_kind(const std::string& name) {
  if (name == "ot-random") return InstanceKind::OtRandom;
  if (name == "ot-quadratic") return InstanceKind::OtQuadratic;
  if (name == "birkhoff") return InstanceKind::Birkhoff;
  if (name == "birkhoff-fixed") return InstanceKind::BirkhoffFixed;
  if (name == "partial-random") return InstanceKind::PartialRandom;
  if (name == "partial-quadratic") return InstanceKind::PartialQuadratic;
  throw InvalidInput("unknown instance kind '" + name + "'");
}

std::string instance_kind_name(InstanceKind kind) {
  switch (kind) {
    case InstanceKind::OtRandom: return "ot-random";
    case InstanceKind::OtQuadratic: return "ot-quadratic";
    case InstanceKind::Birkhoff: return "birkhoff";
    case InstanceKind::BirkhoffFixed: return "birkhoff-fixed";
    case InstanceKind::PartialRandom: return "partial-random";
    case InstanceKind::PartialQuadratic: return "partial-quadratic";
  }
  return "unknown";
}

namespace {

std::vector<double> random_marginal(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = 1.0 - unif(rng);  // (0, 1]
  const double s = sum(v);
  for (double& x : v) x /= s;
  return v;
}

std::vector<FixedEntry> random_fixed_entries(const DenseMatrix& phi, std::mt19937_64& rng) {
  const std::size_t n = phi.rows();
  const std::size_t target =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.05 * double(n * n))));
  std::vector<std::size_t> order(n * n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> row_count(n, 0), col_count(n, 0);
  std::vector<double> row_mass(n, 0.0), col_mass(n, 0.0);
  std::vector<FixedEntry> fixed;
  for (std::size_t idx : order) {
    if (fixed.size() == target) break;
    const std::size_t i = idx / n, j = idx % n;
    const double v = phi(i, j);
    // every row and column keeps a free entry and room for the remaining mass
    if (row_count[i] + 2 > n || col_count[j] + 2 > n) continue;
    if (row_mass[i] + v >= 1.0 || col_mass[j] + v >= 1.0) continue;
    ++row_count[i];
    ++col_count[j];
    row_mass[i] += v;
    col_mass[j] += v;
    fixed.push_back({i, j, v});
  }
  std::sort(fixed.begin(), fixed.end(), [](const FixedEntry& x, const FixedEntry& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  return fixed;
}

}  // namespace

GeneralizedTransportProblem generate_instance(InstanceKind kind, std::size_t n,
                                              std::uint64_t seed) {
  if (n == 0) throw InvalidInput("instance size must be positive");
  std::mt19937_64 rng(seed);
  switch (kind) {
    case InstanceKind::OtRandom:
    case InstanceKind::OtQuadratic:
    case InstanceKind::PartialRandom:
    case InstanceKind::PartialQuadratic: {
      const bool quadratic =
          kind == InstanceKind::OtQuadratic || kind == InstanceKind::PartialQuadratic;
      const DenseMatrix cost =
          gen_cost(quadratic ? CostKind::QuadraticDistance : CostKind::Random, n, rng());
      const std::vector<double> mu = random_marginal(n, rng);
      const std::vector<double> nu = random_marginal(n, rng);
      if (kind == InstanceKind::OtRandom || kind == InstanceKind::OtQuadratic) {
        return build_optimal_transport(cost, mu, nu);
      }
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const double amax = std::min(sum(mu), sum(nu));
      return build_partial_transport(cost, mu, nu, amax * (1.0 - unif(rng)));
    }
    case InstanceKind::Birkhoff:
    case InstanceKind::BirkhoffFixed: {
      const bool fixed = kind == InstanceKind::BirkhoffFixed;
      const double scale = fixed ? 2.0 / static_cast<double>(n) : 1.0;
      std::uniform_real_distribution<double> unif(0.0, scale);
      DenseMatrix phi(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) phi(i, j) = unif(rng);
      }
      if (!fixed) return build_birkhoff_projection(phi);
      const std::vector<FixedEntry> entries = random_fixed_entries(phi, rng);
      return build_birkhoff_projection(phi, entries);
    }
  }
  throw InvalidInput("unknown instance kind");
}

}  // namespace transolve
