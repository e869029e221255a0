#ifndef DSMREG_SOLVER_HPP
#define DSMREG_SOLVER_HPP

// Integration of the regularized gradient flow
//
//   u'(t) = -[B u + eps(t) u - F_delta],   u(0) = u0,
//
// with the Tikhonov path w(t) = (B + eps(t) I)^{-1} F_delta, the gap
// g(t) = ||u(t) - w(t)|| and its Gronwall envelope tracked along the way.

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "dsmreg/operator_core.hpp"
#include "dsmreg/schedule.hpp"
#include "dsmreg/types.hpp"

namespace dsmreg {

struct IntegratorStats {
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  double tolerance = 0.0;
  double min_step = 0.0;
  double max_step = 0.0;

  nlohmann::json to_json() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> eps_values;
  std::vector<Vector> states;
  std::vector<Vector> tikhonov_path;
  std::vector<double> g_values;
  std::vector<double> error_values;  // empty when the exact solution is unknown
  std::vector<double> gronwall_bounds;
  EpsilonSchedule schedule = EpsilonSchedule::log();
  IntegratorStats stats;

  std::size_t size() const { return times.size(); }
  bool has_errors() const { return !error_values.empty(); }
};

/// 0 followed by points 10^{k / per_decade} from t_first up to t_end; the
/// last point is t_end itself.
std::vector<double> log_record_grid(double t_end, int per_decade = 32, double t_first = 1e-2);

/// Adaptive backward Euler with step doubling and local extrapolation.
///
/// The linear system of each implicit step is diagonal in the eigenbasis of
/// B, so the decomposition is computed once and every trial step costs O(n).
/// Steps land exactly on the record grid; 0 is prepended if missing.
/// `tol` bounds the local error relative to ||u|| and must lie in
/// [1e-12, 1e-3].
Trajectory integrate(const NormalSystem<double>& sys, const SpectralDecomposition<double>& decomp,
                     const EpsilonSchedule& s, const Vector& u0, double t_end, double tol,
                     std::vector<double> record_grid, const std::optional<Vector>& y_true = std::nullopt);

Trajectory integrate(const NormalSystem<double>& sys, const EpsilonSchedule& s, const Vector& u0,
                     double t_end, double tol, std::vector<double> record_grid,
                     const std::optional<Vector>& y_true = std::nullopt);

/// int_a^b exp(-int_tau^b eps) |eps'(tau)| / (2 eps(tau)^{3/2}) dtau.
///
/// Evaluated backwards from b over geometrically growing windows, so the
/// exponent never has to be formed as a difference of large primitives.
double damped_forcing(const EpsilonSchedule& s, double a, double b);

/// Gronwall envelope of g(t) = ||u(t) - w(t)||:
///   e^{-E(t)} [g0 + f_norm int_0^t e^{E(tau)} |eps'| / (2 eps^{3/2}) dtau],
/// E(t) = int_0^t eps. Pass ||f_delta|| as f_norm for noisy data.
double gronwall_bound(const EpsilonSchedule& s, double g0, double f_norm, double t);

/// Advances a Gronwall envelope value from t_a to t_b.
double gronwall_step(const EpsilonSchedule& s, double bound_at_a, double f_norm, double t_a, double t_b);

/// c delta / eps(t): bound on ||u_delta(t) - u(t)|| for two flows from the
/// same initial value, c = sqrt(m).
double appendix_bound(const EpsilonSchedule& s, double delta, double c, double t);

/// CSV with header t,eps,g,gronwall_bound,err (err empty when unknown).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
/// Writes `<stem>.csv` and `<stem>.json` (integrator statistics).
void write_trajectory(const std::filesystem::path& stem, const Trajectory& traj);

}  // namespace dsmreg

#endif  // DSMREG_SOLVER_HPP
