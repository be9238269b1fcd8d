#pragma once

#include <string>
#include <vector>

#include "wlasso/linalg.hpp"

namespace wlasso {

struct CsvError : Error {
  using Error::Error;
};

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s, bool& ok);

/// Numeric matrix with a header row. Errors carry file and line number.
DenseMatrix load_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const DenseMatrix& m,
                      const std::vector<std::string>& header);

std::string csv_join(const std::vector<std::string>& fields);

}  // namespace wlasso
