#include "dsmreg/matrix_io.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

using namespace dsmreg;

TEST(MatrixCsv, RoundTripIsExact) {
  Matrix m(3, 2);
  m << 1.0 / 3.0, -2.5e-300, std::numeric_limits<double>::max(), 0.1, -0.0, 123456789.123456789;
  std::stringstream ss;
  write_matrix_csv(ss, m);
  const Matrix back = read_matrix_csv(ss);
  ASSERT_EQ(back.rows(), 3);
  ASSERT_EQ(back.cols(), 2);
  for (Eigen::Index i = 0; i < m.size(); ++i) EXPECT_EQ(back.data()[i], m.data()[i]);
}

TEST(MatrixCsv, RowPerLine) {
  std::stringstream ss("1,2,3\n4,5,6\n");
  const Matrix m = read_matrix_csv(ss);
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 3);
  EXPECT_EQ(m(0, 2), 3.0);
  EXPECT_EQ(m(1, 0), 4.0);
}

TEST(MatrixCsv, Rejects) {
  for (const char* text : {"1,2\n3\n", "1,nan\n", "1,inf\n", "1,abc\n", ""}) {
    std::stringstream ss(text);
    EXPECT_THROW(read_matrix_csv(ss), FormatError) << text;
  }
}

TEST(MatrixCsv, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "dsmreg_io_test.csv";
  Matrix m = Matrix::Random(4, 4);
  write_matrix_csv(path, m);
  EXPECT_EQ(read_matrix_csv(path), m);
  std::filesystem::remove(path);
  EXPECT_THROW(read_matrix_csv(path), std::exception);
}

TEST(MatrixJson, ColumnMajorLayout) {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const auto j = matrix_to_json(m);
  EXPECT_EQ(j.at("rows"), 2);
  EXPECT_EQ(j.at("cols"), 2);
  EXPECT_EQ(j.at("data"), nlohmann::json({1.0, 3.0, 2.0, 4.0}));
  EXPECT_EQ(matrix_from_json(j), m);
}

TEST(MatrixJson, RoundTripThroughText) {
  Matrix m = Matrix::Random(5, 3) * 1e-7;
  const auto text = matrix_to_json(m).dump();
  EXPECT_EQ(matrix_from_json(nlohmann::json::parse(text)), m);
  Vector v = Vector::Random(6);
  EXPECT_EQ(vector_from_json(nlohmann::json::parse(vector_to_json(v).dump())), v);
}

TEST(MatrixJson, Rejects) {
  EXPECT_THROW(matrix_from_json(nlohmann::json{{"rows", 2}, {"cols", 2}, {"data", {1, 2, 3}}}), FormatError);
  EXPECT_THROW(matrix_from_json(nlohmann::json{{"rows", 1}, {"cols", 1}, {"data", {nullptr}}}), FormatError);
  EXPECT_THROW(matrix_from_json(nlohmann::json{{"rows", 1}, {"data", {1}}}), FormatError);
  EXPECT_THROW(vector_from_json(matrix_to_json(Matrix::Ones(2, 2))), FormatError);
}

TEST(FormatDouble, RoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 1e-320, -6.02214076e23, 2.0}) EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
}
