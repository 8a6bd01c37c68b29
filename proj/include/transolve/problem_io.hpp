#pragma once

#include <iosfwd>
#include <string>

#include "transolve/problem.hpp"

namespace transolve {

// JSON document with keys m, n, r, sigma, cost, phi, lower, upper, mu, nu,
// a, cone_y, cone_z. Matrices are arrays of rows; a null upper entry means
// no upper bound.
void write_problem_json(std::ostream& out, const GeneralizedTransportProblem& p);
GeneralizedTransportProblem read_problem_json(std::istream& in);

void save_problem(const std::string& path, const GeneralizedTransportProblem& p);
GeneralizedTransportProblem load_problem(const std::string& path);

}  // namespace transolve
