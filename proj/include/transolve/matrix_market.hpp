#pragma once

#include <iosfwd>
#include <string>

#include "transolve/sparse.hpp"

namespace transolve {

// Coordinate real format, general or symmetric. Symmetric files store the
// lower triangle; reading mirrors it.
CsrMatrix read_matrix_market(std::istream& in);
CsrMatrix read_matrix_market(const std::string& path);

void write_matrix_market(std::ostream& out, const CsrMatrix& a, bool symmetric = false);
void write_matrix_market(const std::string& path, const CsrMatrix& a, bool symmetric = false);

}  // namespace transolve
