#include "dsmreg/matrix_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace dsmreg {

namespace {

double parse_cell(const std::string& cell, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  std::string trimmed = cell;
  const auto first = trimmed.find_first_not_of(" \t\r");
  const auto last = trimmed.find_last_not_of(" \t\r");
  if (first == std::string::npos) throw FormatError("csv: empty cell on line " + std::to_string(line_no));
  trimmed = trimmed.substr(first, last - first + 1);
  try {
    v = std::stod(trimmed, &pos);
  } catch (const std::exception&) {
    throw FormatError("csv: cannot parse '" + trimmed + "' on line " + std::to_string(line_no));
  }
  if (pos != trimmed.size())
    throw FormatError("csv: trailing characters in '" + trimmed + "' on line " + std::to_string(line_no));
  if (!std::isfinite(v)) throw FormatError("csv: non-finite entry on line " + std::to_string(line_no));
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, line_no));
    if (!line.empty() && line.back() == ',') throw FormatError("csv: trailing comma on line " + std::to_string(line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("csv: ragged row on line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("csv: no data");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_matrix_csv(out, m);
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw FormatError("matrix json: expected {rows, cols, data}");
  const auto rows = j.at("rows").get<long long>();
  const auto cols = j.at("cols").get<long long>();
  const auto& data = j.at("data");
  if (rows <= 0 || cols <= 0) throw FormatError("matrix json: non-positive dimension");
  if (!data.is_array() || static_cast<long long>(data.size()) != rows * cols)
    throw FormatError("matrix json: data length != rows*cols");
  Matrix m(rows, cols);
  for (long long k = 0; k < rows * cols; ++k) {
    // Infinity and NaN cannot appear as JSON numbers; null is how they leak in.
    if (!data[k].is_number()) throw FormatError("matrix json: non-numeric or non-finite entry");
    const double v = data[k].get<double>();
    if (!std::isfinite(v)) throw FormatError("matrix json: non-finite entry");
    m.data()[k] = v;
  }
  return m;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

Vector vector_from_json(const nlohmann::json& j) {
  Matrix m = matrix_from_json(j);
  if (m.cols() != 1) throw FormatError("vector json: cols must be 1");
  return m.col(0);
}

nlohmann::json vector_to_json(const Vector& v) { return matrix_to_json(Matrix(v)); }

}  // namespace dsmreg
