#include "dsmreg/quadrature.hpp"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

using namespace dsmreg;

TEST(Quadrature, Polynomials) {
  // GK15 integrates polynomials of degree <= 22 exactly.
  auto r = integrate([](double x) { return std::pow(x, 10); }, 0.0, 2.0);
  EXPECT_NEAR(r.value, std::pow(2.0, 11) / 11.0, 1e-12);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.evaluations, 15u);
}

TEST(Quadrature, SmoothFunctions) {
  EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value, 2.0, 1e-13);
  EXPECT_NEAR(integrate([](double x) { return std::exp(-x); }, 0.0, 50.0).value, 1.0 - std::exp(-50.0), 1e-13);
  EXPECT_NEAR(integrate([](double x) { return 1.0 / x; }, 1.0, 1e6, 1e-12).value, std::log(1e6), 1e-10);
}

TEST(Quadrature, EndpointSingularity) {
  auto r = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10);
  EXPECT_NEAR(r.value, 2.0, 1e-8);
  EXPECT_TRUE(r.converged);
}

TEST(Quadrature, ReversedAndEmptyIntervals) {
  EXPECT_NEAR(integrate([](double x) { return x; }, 1.0, 0.0).value, -0.5, 1e-15);
  EXPECT_EQ(integrate([](double x) { return x; }, 3.0, 3.0).value, 0.0);
}

TEST(Quadrature, ErrorEstimateIsHonest) {
  auto r = integrate([](double x) { return std::cos(100 * x); }, 0.0, 1.0, 1e-9);
  EXPECT_NEAR(r.value, std::sin(100.0) / 100.0, std::max(r.error, 1e-12) * 10);
}
