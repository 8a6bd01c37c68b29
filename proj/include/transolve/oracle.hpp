#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "transolve/problem.hpp"

namespace transolve {

enum class OracleKind { Assignment, TinyTransport, Birkhoff };

std::string oracle_kind_name(OracleKind kind);

struct OracleResult {
  OracleKind kind = OracleKind::Assignment;
  double objective = 0.0;
  std::vector<double> plan;  // m*n, vec order
  std::size_t candidates = 0;  // permutations or supports examined
};

inline constexpr std::size_t kAssignmentMax = 7;
inline constexpr std::size_t kTinyTransportMax = 3;
inline constexpr std::size_t kBirkhoffMax = 2;

// Minimum over all n! permutation plans; requires a square linear transport
// problem whose marginals all equal the same value s. The optimal plan puts
// mass s on each permutation entry.
OracleResult assignment_oracle(const GeneralizedTransportProblem& problem);

// Enumerates every set of m + n - 1 plan entries, solves the marginal
// equations on that support and keeps the cheapest nonnegative solution.
OracleResult tiny_transport_oracle(const GeneralizedTransportProblem& problem);

// Projection-type problems with n <= 2 and unit marginals: the doubly
// stochastic plans form a segment, so the quadratic objective is minimized
// in closed form along it.
OracleResult birkhoff_oracle(const GeneralizedTransportProblem& problem);

// Dispatches on the problem form; throws InvalidInput when no oracle applies
// or the size cap is exceeded.
OracleResult solve_oracle(const GeneralizedTransportProblem& problem);

}  // namespace transolve
