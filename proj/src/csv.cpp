#include "sensorsched/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sensorsched/errors.hpp"

namespace sensorsched::csv {

std::string format(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse(const std::string& field) {
  std::size_t b = field.find_first_not_of(" \t\r");
  std::size_t e = field.find_last_not_of(" \t\r");
  if (b == std::string::npos) {
    throw Error(ErrorKind::Validation, "empty numeric field");
  }
  const std::string f = field.substr(b, e - b + 1);
  if (f == "inf" || f == "+inf") return INFINITY;
  if (f == "-inf") return -INFINITY;
  if (f == "nan") return NAN;
  double v = 0.0;
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
    throw Error(ErrorKind::Validation, "not a number: '" + f + "'");
  }
  return v;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

void write_matrix(std::ostream& out, const Matrix& M) {
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      if (c) out << ',';
      out << format(M(r, c));
    }
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(parse(field));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::Validation, "ragged CSV rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::Validation, "CSV holds no rows");
  Matrix M(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return M;
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open " + path);
  return read_matrix(in);
}

void save_matrix(const std::string& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Validation, "cannot write " + path);
  write_matrix(out, M);
}

}  // namespace sensorsched::csv
