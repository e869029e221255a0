#ifndef DSMREG_MATRIX_IO_HPP
#define DSMREG_MATRIX_IO_HPP

// Matrix/vector exchange formats.
//
//  * CSV: one matrix row per line, comma separated, no header.
//  * JSON: {"rows": r, "cols": c, "data": [...]} with data in column-major
//    order (Eigen's native storage).
//
// Numbers are written with 17 significant digits so a write/read cycle is
// exact. Both readers reject non-finite entries.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dsmreg/types.hpp"

namespace dsmreg {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(std::ostream& out, const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);

/// Vectors travel as rows x 1 matrices.
Vector vector_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);

/// Shortest round-trippable formatting (17 significant digits).
std::string format_double(double x);

}  // namespace dsmreg

#endif  // DSMREG_MATRIX_IO_HPP
