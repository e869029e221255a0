#ifndef DSMREG_STOPPING_HPP
#define DSMREG_STOPPING_HPP

// Stopping rules for the noisy flow. Each picks the time t_delta at which
// u(t) is read off as the regularized solution.
//
//  * oracle:   beta(delta) minimizes phi(beta, y) + delta / (2 sqrt(beta)),
//              with phi(beta, y) = beta ||(B + beta I)^{-1} y||; t_delta solves
//              eps(t_delta) = beta(delta). Needs the exact solution y.
//  * apriori:  same construction with phi replaced by its worst case over
//              the source set {y = B^a h, ||h|| <= R}.
//  * appendix: minimal minimizer of c delta / eps(t) + ||u(t) - y|| over the
//              recorded times of a noiseless trajectory.

#include <optional>
#include <string>

#include <json.hpp>

#include "dsmreg/operator_core.hpp"
#include "dsmreg/schedule.hpp"
#include "dsmreg/solver.hpp"
#include "dsmreg/types.hpp"

namespace dsmreg {

enum class StoppingRule { oracle, apriori, appendix };

std::string to_string(StoppingRule rule);

struct StoppingResult {
  StoppingRule rule = StoppingRule::oracle;
  std::optional<double> beta;  // absent for the appendix rule
  double t_stop = 0.0;
  double eta = 0.0;            // eta(delta), or mu(delta) for the appendix rule
  double source_a = 0.0;       // apriori rule only
  // Search diagnostics.
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
};

/// beta * sqrt(sum_i <v_i, y>^2 / (lambda_i + beta)^2).
template <typename Scalar>
Scalar phi(const SpectralDecomposition<Scalar>& decomp, const VectorX<Scalar>& y, Scalar beta) {
  if (!(beta > Scalar(0))) throw std::domain_error("phi: beta must be positive");
  if (y.size() != decomp.size()) throw std::invalid_argument("phi: size mismatch");
  const VectorX<Scalar> coeff = decomp.to_spectral(y);
  return beta * (coeff.array() / (decomp.eigenvalues.array() + beta)).matrix().norm();
}

/// beta * ||(B + beta I)^{-1} y|| via a Cholesky solve; independent of the
/// eigendecomposition.
template <typename Scalar>
Scalar phi_direct(const MatrixX<Scalar>& b, const VectorX<Scalar>& y, Scalar beta) {
  return beta * tikhonov_solve(b, y, beta).norm();
}

/// phi(beta) + delta / (2 sqrt(beta)).
double stopping_objective(const SpectralDecomposition<double>& decomp, const Vector& y, double delta,
                          double beta);

struct Minimizer {
  double beta = 0.0;
  double eta = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
};

/// Minimizes the stopping objective over beta in [1e-14 ||B||, ||B||].
///
/// A log-spaced scan locates the smallest grid minimizer (the objective can
/// have several local minima for a discrete spectrum), then golden-section
/// search on log(beta) refines it to 1e-6 relative.
Minimizer minimize_h(const SpectralDecomposition<double>& decomp, const Vector& y, double delta);

StoppingResult oracle_stop(const SpectralDecomposition<double>& decomp, const Vector& y, double delta,
                           const EpsilonSchedule& s);

/// Closed-form rule for y in {B^a h : ||h|| <= R}, ||B|| <= m. For a >= 1
/// uses phi(eps) <= eps m^{a-1} R, for 0 < a < 1 phi(eps) <= eps^a R.
StoppingResult apriori_stop(double a, double R, double m, double delta, const EpsilonSchedule& s);

/// Minimal minimizer of c delta / eps(t) + error(t) over the recorded grid.
StoppingResult appendix_stop(const Trajectory& traj, double delta, double c);

/// Rule spec from config: {"rule":"oracle"} | {"rule":"apriori","a":1,"R":1} | {"rule":"appendix"}.
struct RuleSpec {
  StoppingRule rule = StoppingRule::oracle;
  double a = 1.0;
  double R = 1.0;

  std::string label() const;
};

RuleSpec rule_from_json(const nlohmann::json& j);
nlohmann::json rule_to_json(const RuleSpec& r);

}  // namespace dsmreg

#endif  // DSMREG_STOPPING_HPP
