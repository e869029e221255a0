#ifndef DSMREG_PROBLEMS_HPP
#define DSMREG_PROBLEMS_HPP

// Reproducible ill-posed test instances.
//
// hilbert   A[i][j] = 1 / (i + j + 1).
// gravity   k(s,t) = d (d^2 + (s - t)^2)^{-3/2}, d = 0.25, on [0,1] x [0,1];
//           y(t) = sin(pi t) + 0.5 sin(2 pi t).
// deriv2    pi^2 k(s,t) with k(s,t) = s (t - 1) for s < t, t (s - 1) otherwise,
//           the Green's function of u'' with Dirichlet ends, scaled so the
//           continuous operator has unit norm; y(t) = t (1 - t).
//
// Integral operators are discretized with the midpoint rule on n cells:
// A[i][j] = k(s_i, t_j) / n, s_i = t_i = (i + 1/2) / n.

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include <json.hpp>

#include "dsmreg/operator_core.hpp"
#include "dsmreg/types.hpp"

namespace dsmreg {

/// Portable generator: std::mt19937_64 for the bits (its output sequence is
/// fixed by the C++ standard), 53-bit uniforms, Box-Muller normals.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed);
  double uniform();  // [0, 1)
  double normal();
  Vector normal_vector(Eigen::Index n);
  /// Standard normal draw scaled to unit norm.
  Vector unit_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct ProblemInstance {
  DenseOperator<double> op;
  Vector y_true;
  Vector f_clean;
  Vector f_noisy;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::string kind;
  std::string label;

  Eigen::Index size() const { return op.cols(); }
};

enum class TargetSpec { ones, smooth, seeded };
enum class FredholmKind { gravity, deriv2 };

TargetSpec target_from_string(const std::string& s);
FredholmKind fredholm_from_string(const std::string& s);
std::string to_string(FredholmKind kind);

/// "smooth" is y_i = exp(-x_i), x_i = (i + 1/2) / n; "seeded" is a standard
/// normal draw from PortableRng(seed).
ProblemInstance hilbert_problem(int n, TargetSpec target = TargetSpec::ones, std::uint64_t seed = 0);

ProblemInstance fredholm_problem(FredholmKind kind, int n);

/// Bound on ||A|| implied by the kernel: 2/d + 1/(d^2 n) for gravity (Schur
/// test with the midpoint overshoot of the peak), pi^2 / 8 for deriv2.
double fredholm_norm_bound(FredholmKind kind, int n);

/// B^a h = sum_i lambda_i^a <v_i, h> v_i.
Vector source_condition_target(const SpectralDecomposition<double>& decomp, double a, const Vector& h);
Vector source_condition_target(const NormalSystem<double>& sys, double a, const Vector& h);

/// Replaces the exact solution and recomputes f = A y (noise is dropped).
ProblemInstance with_target(ProblemInstance inst, Vector y, const std::string& label_suffix = "");

/// f_delta = f + delta e with e a seeded unit vector, so ||f_delta - f|| = delta.
ProblemInstance add_noise(ProblemInstance inst, double delta, std::uint64_t seed);

NormalSystem<double> normal_system(const ProblemInstance& inst);

/// Builds an instance from a config entry, e.g.
///   {"kind":"hilbert","n":8,"y":"smooth"}
///   {"kind":"deriv2","n":32,"source":{"a":1.0,"h":"ones"}}
/// With "source", y = B^a h where h is normalized to ||h|| = R ("R", default 1);
/// h is "ones" or "seeded" (with "seed").
ProblemInstance problem_from_spec(const nlohmann::json& spec);

/// Matrix JSON of the operator plus {label, n, delta, seed, kind} and the
/// vectors y_true, f_clean, f_noisy.
nlohmann::json problem_to_json(const ProblemInstance& inst);
ProblemInstance problem_from_json(const nlohmann::json& j);

}  // namespace dsmreg

#endif  // DSMREG_PROBLEMS_HPP
