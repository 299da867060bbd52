#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sensorsched/netmodel.hpp"

namespace sensorsched::csv {

/// Shortest form that round-trips; +/-inf as "inf" / "-inf", NaN as "nan".
std::string format(double value);
double parse(const std::string& field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);
void write_matrix(std::ostream& out, const Matrix& M);
/// Rows of comma-separated numbers; blank lines and lines starting with '#'
/// are skipped. All rows must have the same width.
Matrix read_matrix(std::istream& in);

Matrix load_matrix(const std::string& path);
void save_matrix(const std::string& path, const Matrix& M);

}  // namespace sensorsched::csv
