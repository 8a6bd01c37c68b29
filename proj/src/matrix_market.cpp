#include "transolve/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "transolve/error.hpp"

namespace transolve {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

CsrMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("matrix market: empty input");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix" ||
      lower(format) != "coordinate") {
    throw InvalidInput("matrix market: only coordinate matrices are supported");
  }
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "integer") {
    throw InvalidInput("matrix market: unsupported field '" + field + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw InvalidInput("matrix market: unsupported symmetry '" + symmetry + "'");
  }
  const bool sym = symmetry == "symmetric";

  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::size_t rows = 0, cols = 0, entries = 0;
  {
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> entries)) {
      throw InvalidInput("matrix market: bad size line");
    }
  }
  std::vector<Triplet> trips;
  trips.reserve(sym ? 2 * entries : entries);
  for (std::size_t k = 0; k < entries; ++k) {
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) throw InvalidInput("matrix market: truncated entry list");
    if (i == 0 || j == 0 || i > rows || j > cols) {
      throw InvalidInput("matrix market: entry index out of range");
    }
    trips.push_back({i - 1, j - 1, v});
    if (sym && i != j) trips.push_back({j - 1, i - 1, v});
  }
  return CsrMatrix::from_triplets(rows, cols, std::move(trips));
}

CsrMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const CsrMatrix& a, bool symmetric) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j : a.row_cols(i)) {
      if (!symmetric || j <= i) ++count;
    }
  }
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general")
      << "\n";
  out << a.rows() << " " << a.cols() << " " << count << "\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (symmetric && cols[k] > i) continue;
      out << i + 1 << " " << cols[k] + 1 << " " << vals[k] << "\n";
    }
  }
}

void write_matrix_market(const std::string& path, const CsrMatrix& a, bool symmetric) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  write_matrix_market(out, a, symmetric);
}

}  // namespace transolve
