#ifndef DSMREG_SCHEDULE_HPP
#define DSMREG_SCHEDULE_HPP

// Regularization schedules eps(t): positive, C^1, decreasing to zero with
// |eps'(t)| / eps(t)^{5/2} -> 0.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dsmreg {

enum class ScheduleKind { log, loglog, power, generator, custom };

std::string to_string(ScheduleKind kind);

namespace detail {
struct ScheduleModel;
}

/// Immutable value type. Quadrature tables needed by the non-closed-form
/// families are built on construction, so concurrent evaluation is safe.
class EpsilonSchedule {
 public:
  using Function = std::function<double(double)>;

  /// eps(t) = 1 / log(t + 2).
  static EpsilonSchedule log();
  /// eps(t) = (1 + log log(2 + t))^{-2/3}.
  static EpsilonSchedule loglog();
  /// eps(t) = eps0 (1 + t)^{-p}, 0 < p < 2/3.
  static EpsilonSchedule power(double p, double eps0 = 1.0);
  /// eps(t) = [c + int_0^t h(s) ds]^{-2/3}. The inner integral is evaluated
  /// by adaptive quadrature; h must be positive.
  static EpsilonSchedule from_generator(double c, Function h, std::string name = "custom");
  /// Named generator with its default constant (see generator_default_c).
  static EpsilonSchedule from_named_generator(const std::string& name, std::optional<double> c = {});
  /// Arbitrary C^1 function with its derivative. Intended for certification
  /// tests of schedules that are not in the built-in families.
  static EpsilonSchedule custom(Function eval, Function deriv, std::string label);

  double operator()(double t) const { return eval(t); }
  double eval(double t) const;
  double derivative(double t) const;
  /// int_0^t eps(s) ds.
  double primitive(double t) const;
  /// int_a^b eps(s) ds, computed locally (no difference of large primitives).
  double integral(double a, double b) const;
  /// |eps'(t)| / eps(t)^{5/2}.
  double decay_ratio(double t) const;
  double initial() const { return eval(0.0); }

  ScheduleKind kind() const;
  /// Family parameters in declaration order: power {p, eps0}, generator {c}.
  std::vector<double> params() const;
  /// Generator name for generator schedules, label for custom ones.
  const std::string& name() const;
  /// Stable human readable identifier, used in output tables.
  std::string label() const;
  /// Generator function h for generator schedules, empty otherwise.
  const Function& generator() const;

 private:
  explicit EpsilonSchedule(std::shared_ptr<const detail::ScheduleModel> model)
      : model_(std::move(model)) {}
  std::shared_ptr<const detail::ScheduleModel> model_;
};

/// Named generators: "paper_loglog" is h(s) = 1 / ((2 + s) log(2 + s)).
EpsilonSchedule::Function named_generator(const std::string& name);
/// Constant c that makes a named generator reproduce its closed-form
/// schedule. For "paper_loglog" this is 1 + log log 2, which turns
/// [c + log log(2+t) - log log 2]^{-2/3} into (1 + log log(2+t))^{-2/3}.
double generator_default_c(const std::string& name);

EpsilonSchedule schedule_from_json(const nlohmann::json& spec);
nlohmann::json schedule_to_json(const EpsilonSchedule& s);

/// Finite-horizon trend test of the decay conditions on eps.
struct CertificationReport {
  bool positive = false;               // eps > 0 on the grid
  bool nonincreasing = false;          // eps(t2) <= eps(t1)(1 + 1e-12)
  bool decays_to_zero = false;         // strict drop over the last decade
  bool ratio_vanishes = false;         // ratio does not grow and trends down at the tail
  bool divergent = false;              // primitive(t_max) >= 1.5 primitive(t_max / 10)
  bool derivative_consistent = false;  // finite differences match eps' to 1e-6
  bool certified = false;

  double t_max = 0.0;
  std::size_t n_samples = 0;
  double min_eps = 0.0;
  double ratio_first_decade = 0.0;
  double ratio_last_decade = 0.0;
  double ratio_tail_slope = 0.0;       // log-log slope of the ratio, last two decades
  double tail_drop = 0.0;              // eps(t_max) / eps(t_max / 10)
  double primitive_growth = 0.0;       // primitive(t_max) / primitive(t_max / 10)
  double max_derivative_error = 0.0;

  // eps(t) >= 1 / (c0 + c t) with c0 = 1/eps(0), c = max |eps'| / eps^2.
  double lower_bound_c0 = 0.0;
  double lower_bound_c = 0.0;
  bool lower_bound_holds = false;

  // Generator schedules only: whether h is decreasing to zero on the grid.
  // Informational, not part of certification.
  std::optional<bool> generator_vanishes;

  nlohmann::json to_json() const;
};

/// Samples eps on {0} and n_samples log-spaced points in [1, t_max].
/// Requires t_max >= 100 and n_samples >= 64.
CertificationReport validate(const EpsilonSchedule& s, double t_max = 1e6, std::size_t n_samples = 256);

/// The unique t >= 0 with eps(t) = beta. Requires 0 < beta <= eps(0); throws
/// std::domain_error if beta is out of range or t is not representable.
double invert(const EpsilonSchedule& s, double beta);

}  // namespace dsmreg

#endif  // DSMREG_SCHEDULE_HPP
