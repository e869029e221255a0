#include "dsmreg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "dsmreg/matrix_io.hpp"
#include "dsmreg/quadrature.hpp"

namespace dsmreg {

namespace {

constexpr std::size_t kMaxSteps = 50'000'000;
// exp(-745) underflows to zero.
constexpr double kNegligibleExponent = 745.0;
// Relative variation of eps and the forcing rate below which a window is
// treated with frozen coefficients.
constexpr double kFrozenVariation = 1e-7;

double forcing_rate(const EpsilonSchedule& s, double t) {
  const double e = s.eval(t);
  return std::abs(s.derivative(t)) / (2.0 * e * std::sqrt(e));
}

}  // namespace

nlohmann::json IntegratorStats::to_json() const {
  return {{"accepted_steps", accepted_steps},
          {"rejected_steps", rejected_steps},
          {"tolerance", tolerance},
          {"min_step", min_step},
          {"max_step", max_step}};
}

std::vector<double> log_record_grid(double t_end, int per_decade, double t_first) {
  if (!(t_end > 0.0)) throw std::invalid_argument("log_record_grid: t_end must be positive");
  if (per_decade < 1) throw std::invalid_argument("log_record_grid: per_decade must be >= 1");
  std::vector<double> grid{0.0};
  const double first = std::min(t_first, t_end);
  for (long k = static_cast<long>(std::ceil(per_decade * std::log10(first)));; ++k) {
    const double t = std::pow(10.0, static_cast<double>(k) / per_decade);
    if (t >= t_end * (1.0 - 1e-12)) break;
    if (t > 0.0) grid.push_back(t);
  }
  grid.push_back(t_end);
  return grid;
}

double damped_forcing(const EpsilonSchedule& s, double a, double b) {
  if (!(b > a)) return 0.0;
  double total = 0.0;
  double accumulated = 0.0;  // int_hi^b eps
  double hi = b;
  // Never narrower than a few ulps of b, or lo == hi in floating point.
  const double ulp = std::nextafter(b, INFINITY) - b;
  double width = std::min(b - a, std::max(1.0 / s.eval(b), 64.0 * ulp));
  while (hi > a) {
    const double lo = std::max(a, hi - width);
    const double acc = accumulated;
    const double e_lo = s.eval(lo), e_hi = s.eval(hi);
    const double r_lo = forcing_rate(s, lo), r_mid = forcing_rate(s, 0.5 * (lo + hi)), r_hi = forcing_rate(s, hi);
    const double r_max = std::max({r_lo, r_mid, r_hi});
    const bool frozen = std::abs(e_lo - e_hi) <= kFrozenVariation * e_hi &&
                        r_max - std::min({r_lo, r_mid, r_hi}) <= kFrozenVariation * r_max;
    if (frozen) {
      // Coefficients are constant to 1e-7 here; eps at its minimum and r at
      // its maximum keep the result an upper bound. This is also the only
      // option far out, where a 1/eps boundary layer is below one ulp of t.
      const double e_min = std::min(e_lo, e_hi);
      const double span = hi - lo;
      total += std::exp(-acc) * r_max * -std::expm1(-e_min * span) / e_min;
      accumulated += e_min * span;
    } else {
      auto integrand = [&](double tau) {
        return std::exp(-(acc + s.integral(tau, hi))) * forcing_rate(s, tau);
      };
      total += integrate(integrand, lo, hi, 1e-10, 0.0, 2000).value;
      accumulated += s.integral(lo, hi);
    }
    if (accumulated > kNegligibleExponent) break;
    hi = lo;
    width *= 2.0;
  }
  return total;
}

double gronwall_step(const EpsilonSchedule& s, double bound_at_a, double f_norm, double t_a, double t_b) {
  if (!(t_b > t_a)) return bound_at_a;
  const double decay = std::exp(-s.integral(t_a, t_b));
  const double forced = f_norm > 0.0 ? f_norm * damped_forcing(s, t_a, t_b) : 0.0;
  return decay * bound_at_a + forced;
}

double gronwall_bound(const EpsilonSchedule& s, double g0, double f_norm, double t) {
  if (!std::isfinite(g0) || !std::isfinite(f_norm) || !std::isfinite(t))
    throw std::invalid_argument("gronwall_bound: non-finite input");
  if (g0 < 0.0 || f_norm < 0.0 || t < 0.0) throw std::invalid_argument("gronwall_bound: negative input");
  double bound = g0;
  double from = 0.0;
  double to = std::min(1.0, t);
  while (from < t) {
    bound = gronwall_step(s, bound, f_norm, from, to);
    from = to;
    to = std::min(2.0 * to, t);
  }
  return bound;
}

double appendix_bound(const EpsilonSchedule& s, double delta, double c, double t) {
  if (delta == 0.0) return 0.0;
  return c * delta / s.eval(t);
}

Trajectory integrate(const NormalSystem<double>& sys, const EpsilonSchedule& s, const Vector& u0,
                     double t_end, double tol, std::vector<double> record_grid,
                     const std::optional<Vector>& y_true) {
  return integrate(sys, spectral_decompose(sys), s, u0, t_end, tol, std::move(record_grid), y_true);
}

Trajectory integrate(const NormalSystem<double>& sys, const SpectralDecomposition<double>& decomp,
                     const EpsilonSchedule& s, const Vector& u0, double t_end, double tol,
                     std::vector<double> record_grid, const std::optional<Vector>& y_true) {
  const Eigen::Index n = sys.size();
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("integrate: t_end must be positive");
  if (!(tol >= 1e-12 && tol <= 1e-3)) throw std::invalid_argument("integrate: tol must lie in [1e-12, 1e-3]");
  if (u0.size() != n) throw std::invalid_argument("integrate: u0 has wrong length");
  if (y_true && y_true->size() != n) throw std::invalid_argument("integrate: y_true has wrong length");
  if (decomp.size() != n) throw std::invalid_argument("integrate: decomposition size mismatch");
  if (record_grid.empty() || record_grid.front() != 0.0) record_grid.insert(record_grid.begin(), 0.0);
  for (std::size_t i = 1; i < record_grid.size(); ++i)
    if (!(record_grid[i] > record_grid[i - 1]))
      throw std::invalid_argument("integrate: record grid must be strictly increasing");
  if (record_grid.back() > t_end) throw std::invalid_argument("integrate: record grid exceeds t_end");

  const Vector& lambda = decomp.eigenvalues;
  const Vector rhs_hat = decomp.to_spectral(sys.rhs);
  Vector c = decomp.to_spectral(u0);

  Trajectory traj;
  traj.schedule = s;
  traj.stats.tolerance = tol;
  traj.stats.min_step = std::numeric_limits<double>::infinity();

  auto record = [&](double t) {
    const double e = s.eval(t);
    Vector w_hat = rhs_hat.array() / (lambda.array() + e);
    Vector u = decomp.from_spectral(c);
    Vector w = decomp.from_spectral(w_hat);
    traj.times.push_back(t);
    traj.eps_values.push_back(e);
    // The eigenbasis is orthonormal; the gap is measured there to skip two
    // rounding-prone basis changes.
    traj.g_values.push_back((c - w_hat).norm());
    if (y_true) traj.error_values.push_back((u - *y_true).norm());
    traj.states.push_back(std::move(u));
    traj.tikhonov_path.push_back(std::move(w));
  };

  // One backward Euler step of size h from time t.
  auto implicit_step = [&](const Vector& from, double t, double h) -> Vector {
    const double e = s.eval(t + h);
    return (from + h * rhs_hat).array() / (1.0 + h * (lambda.array() + e));
  };

  record(0.0);
  traj.states.front() = u0;
  traj.g_values.front() = (u0 - traj.tikhonov_path.front()).norm();
  if (y_true) traj.error_values.front() = (u0 - *y_true).norm();
  traj.gronwall_bounds.push_back(traj.g_values.front());

  double t = 0.0;
  double h = 1e-3 / std::max(1.0, decomp.norm() + s.initial());
  std::size_t steps = 0;
  for (std::size_t k = 1; k < record_grid.size(); ++k) {
    const double target = record_grid[k];
    while (t < target) {
      double step = std::min(h, target - t);
      // Avoid leaving a sliver that would force a tiny final step.
      if (target - (t + step) < 1e-10 * target) step = target - t;
      const bool clipped = step < h;

      const Vector big = implicit_step(c, t, step);
      const Vector half = implicit_step(c, t, 0.5 * step);
      const Vector two_halves = implicit_step(half, t + 0.5 * step, 0.5 * step);
      const double err = (two_halves - big).norm();
      const double scale = std::max(two_halves.norm(), c.norm());
      const double allowed = tol * scale;

      if (++steps > kMaxSteps) throw std::runtime_error("integrate: step limit exceeded");
      if (err <= allowed || scale == 0.0) {
        c = 2.0 * two_halves - big;
        if (!c.allFinite())
          throw std::runtime_error("integrate: non-finite state; tolerance too loose for the stiffness ratio");
        t = (step == target - t) ? target : t + step;
        ++traj.stats.accepted_steps;
        traj.stats.min_step = std::min(traj.stats.min_step, step);
        traj.stats.max_step = std::max(traj.stats.max_step, step);
        const double factor = err > 0.0 ? 0.9 * std::sqrt(allowed / err) : 4.0;
        const double grown = step * std::clamp(factor, 0.2, 4.0);
        // A step clipped by the record grid says little about the proposal.
        h = clipped ? std::max(h, grown) : grown;
      } else {
        ++traj.stats.rejected_steps;
        h = step * std::clamp(0.9 * std::sqrt(allowed / err), 0.2, 0.9);
        if (h < 1e-15 * std::max(1.0, t)) throw std::runtime_error("integrate: step size underflow");
      }
    }
    const double previous = traj.times.back();
    record(target);
    traj.gronwall_bounds.push_back(
        gronwall_step(s, traj.gronwall_bounds.back(), sys.data_norm, previous, target));
  }
  if (traj.stats.accepted_steps == 0) traj.stats.min_step = 0.0;
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,eps,g,gronwall_bound,err\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_double(traj.times[i]) << ',' << format_double(traj.eps_values[i]) << ','
        << format_double(traj.g_values[i]) << ',' << format_double(traj.gronwall_bounds[i]) << ',';
    if (traj.has_errors()) out << format_double(traj.error_values[i]);
    out << '\n';
  }
}

void write_trajectory(const std::filesystem::path& stem, const Trajectory& traj) {
  auto csv_path = stem;
  csv_path += ".csv";
  auto json_path = stem;
  json_path += ".json";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  write_trajectory_csv(csv, traj);
  std::ofstream js(json_path, std::ios::binary);
  if (!js) throw std::runtime_error("cannot write " + json_path.string());
  nlohmann::json j = traj.stats.to_json();
  j["schedule"] = traj.schedule.label();
  j["points"] = traj.size();
  js << j.dump(2) << '\n';
}

}  // namespace dsmreg
