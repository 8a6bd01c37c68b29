#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "transolve/sparse.hpp"

namespace transolve {

enum class ConeKind { NonNegative, Zero };

// Sentinel for an absent upper bound.
inline constexpr double kUnbounded = std::numeric_limits<double>::max();
inline bool is_unbounded(double v) { return v >= kUnbounded; }

// Box-constrained transport program
//
//   min  sigma/2 |x - phi|^2 + c^T x
//   s.t. column sums of X + y = mu, row sums of X + z = nu, [sum(X) = a],
//        lower <= x <= upper, y in cone_y, z in cone_z.
//
// The plan X is m x n and is stored as x = vec(X) in column-major order:
// X(i, j) lives at index i + j * m. The primal vector is u = (x, y, z) of
// length m*n + n + m; the multiplier has length n + m + r, ordered as
// (column constraints, row constraints, total mass).
struct GeneralizedTransportProblem {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t r = 0;
  std::vector<double> c;
  double sigma = 0.0;
  std::vector<double> phi;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> mu;
  std::vector<double> nu;
  double a = 0.0;
  ConeKind cone_y = ConeKind::Zero;
  ConeKind cone_z = ConeKind::Zero;

  std::size_t plan_size() const { return m * n; }
  std::size_t primal_size() const { return m * n + n + m; }
  std::size_t dual_size() const { return n + m + r; }
  std::size_t vec_index(std::size_t i, std::size_t j) const { return i + j * m; }

  // Bounds of the k-th primal coordinate of u = (x, y, z).
  double lower_bound(std::size_t k) const;
  double upper_bound(std::size_t k) const;

  // b = (mu, nu, a)
  std::vector<double> rhs() const;

  // Throws InvalidInput when a structural or sign invariant is violated.
  void validate() const;
};

GeneralizedTransportProblem build_optimal_transport(const DenseMatrix& cost,
                                                    std::span<const double> mu,
                                                    std::span<const double> nu);

struct FixedEntry {
  std::size_t row;
  std::size_t col;
  double value;
};

GeneralizedTransportProblem build_birkhoff_projection(const DenseMatrix& phi,
                                                      std::span<const FixedEntry> fixed = {});

GeneralizedTransportProblem build_partial_transport(const DenseMatrix& cost,
                                                    std::span<const double> mu,
                                                    std::span<const double> nu, double a);

enum class CostKind { Random, QuadraticDistance };

// n x n cost. QuadraticDistance places the n points on a sqrt(n) x sqrt(n)
// grid of the unit square, numbered row by row.
DenseMatrix gen_cost(CostKind kind, std::size_t n, std::uint64_t seed);

enum class Direction { Forward, Adjoint };

std::vector<double> apply_constraint_operator(const GeneralizedTransportProblem& p,
                                              Direction direction, std::span<const double> v);
// out = H u
void apply_h(const GeneralizedTransportProblem& p, std::span<const double> u,
             std::span<double> out);
// out = H^T lambda
void apply_ht(const GeneralizedTransportProblem& p, std::span<const double> lambda,
              std::span<double> out);

double objective_h(const GeneralizedTransportProblem& p, std::span<const double> x);

std::vector<double> proj_box(std::span<const double> v, std::span<const double> lower,
                             std::span<const double> upper);
std::vector<double> proj_cone(std::span<const double> v, ConeKind kind);
// Projection of a full primal vector u = (x, y, z) onto the feasible box.
void proj_sigma(const GeneralizedTransportProblem& p, std::span<double> u);

struct KktResidual {
  double res_x = 0.0;
  double res_y = 0.0;
  double res_z = 0.0;
  double res_lambda = 0.0;
  double relative = 0.0;
};

inline constexpr double kKktFloor = 1e-16;
// An initial residual at or below this fraction of the largest initial
// residual counts as zero and is normalized by the largest one instead.
inline constexpr double kKktZeroRatio = 1e-12;

KktResidual kkt_residuals(const GeneralizedTransportProblem& p, std::span<const double> u,
                          std::span<const double> lambda);
// Fills current.relative with the largest ratio against the initial residuals
// (denominators floored at kKktFloor).
void set_relative(KktResidual& current, const KktResidual& initial);

enum class InstanceKind {
  OtRandom,
  OtQuadratic,
  Birkhoff,
  BirkhoffFixed,
  PartialRandom,
  PartialQuadratic,
};

InstanceKind parse_instance_kind(const std::string& name);
std::string instance_kind_name(InstanceKind kind);

// Seeded instance of size n (n x n plan).
GeneralizedTransportProblem generate_instance(InstanceKind kind, std::size_t n,
                                              std::uint64_t seed);

}  // namespace transolve
