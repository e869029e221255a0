#include "dsmreg/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "dsmreg/quadrature.hpp"

namespace dsmreg {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::log: return "log";
    case ScheduleKind::loglog: return "loglog";
    case ScheduleKind::power: return "power";
    case ScheduleKind::generator: return "generator";
    case ScheduleKind::custom: return "custom";
  }
  return "unknown";
}

namespace {

constexpr double kTableRelTol = 1e-12;
constexpr int kTableSegments = 110;  // knots 2^k - 1 up to ~1.3e33

std::string short_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// Running integral int_0^t f with cumulative values cached at knots
/// 0, 1, 3, 7, ..., 2^k - 1. Evaluation adds one local quadrature from the
/// nearest knot below t.
class CumulativeTable {
 public:
  CumulativeTable() = default;
  explicit CumulativeTable(std::function<double(double)> f) : f_(std::move(f)) {
    knots_.reserve(kTableSegments + 1);
    cumulative_.reserve(kTableSegments + 1);
    knots_.push_back(0.0);
    cumulative_.push_back(0.0);
    double knot = 0.0;
    for (int k = 1; k <= kTableSegments; ++k) {
      const double next = std::ldexp(1.0, k) - 1.0;
      cumulative_.push_back(cumulative_.back() + local(knot, next));
      knots_.push_back(next);
      knot = next;
    }
  }

  double at(double t) const {
    if (t <= 0.0) return 0.0;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - knots_.begin()) - 1;
    return cumulative_[k] + local(knots_[k], t);
  }

  double between(double a, double b) const {
    if (a == b) return 0.0;
    if (b < a) return -between(b, a);
    if (!(b > a)) throw std::invalid_argument("schedule integral: non-finite bounds");
    if (b <= 4.0 * (a + 1.0)) return local(a, b);
    return at(b) - at(a);
  }

 private:
  double local(double a, double b) const {
    if (a == b) return 0.0;
    return integrate(f_, a, b, kTableRelTol, 0.0, 2000).value;
  }

  std::function<double(double)> f_;
  std::vector<double> knots_;
  std::vector<double> cumulative_;
};

}  // namespace

namespace detail {

struct ScheduleModel {
  virtual ~ScheduleModel() = default;
  virtual double eval(double t) const = 0;
  virtual double deriv(double t) const = 0;
  virtual double primitive(double t) const { return table_.at(t); }
  virtual double integral(double a, double b) const { return table_.between(a, b); }
  virtual ScheduleKind kind() const = 0;
  virtual std::vector<double> params() const { return {}; }
  virtual std::string label() const = 0;

  std::string name;
  EpsilonSchedule::Function generator;

 protected:
  // Derived constructors call this once eval() is usable.
  void build_table() {
    table_ = CumulativeTable([this](double s) { return eval(s); });
  }
  CumulativeTable table_;
};

namespace {

struct LogModel final : ScheduleModel {
  LogModel() { build_table(); }
  double eval(double t) const override { return 1.0 / std::log(t + 2.0); }
  double deriv(double t) const override {
    const double l = std::log(t + 2.0);
    return -1.0 / ((t + 2.0) * l * l);
  }
  ScheduleKind kind() const override { return ScheduleKind::log; }
  std::string label() const override { return "log"; }
};

struct LogLogModel final : ScheduleModel {
  LogLogModel() { build_table(); }
  double eval(double t) const override {
    return std::pow(1.0 + std::log(std::log(2.0 + t)), -2.0 / 3.0);
  }
  double deriv(double t) const override {
    const double l = std::log(2.0 + t);
    return -(2.0 / 3.0) * std::pow(1.0 + std::log(l), -5.0 / 3.0) / ((2.0 + t) * l);
  }
  ScheduleKind kind() const override { return ScheduleKind::loglog; }
  std::string label() const override { return "loglog"; }
};

struct PowerModel final : ScheduleModel {
  PowerModel(double p, double eps0) : p(p), eps0(eps0) {}
  double eval(double t) const override { return eps0 * std::pow(1.0 + t, -p); }
  double deriv(double t) const override { return -p * eps0 * std::pow(1.0 + t, -p - 1.0); }
  double primitive(double t) const override { return integral(0.0, t); }
  double integral(double a, double b) const override {
    // eps0 / (1-p) [(1+b)^{1-p} - (1+a)^{1-p}], written to avoid cancellation
    // when b is close to a.
    const double q = 1.0 - p;
    return eps0 / q * std::pow(1.0 + a, q) * std::expm1(q * std::log1p((b - a) / (1.0 + a)));
  }
  ScheduleKind kind() const override { return ScheduleKind::power; }
  std::vector<double> params() const override { return {p, eps0}; }
  std::string label() const override {
    return "power:p=" + short_double(p) + ":eps0=" + short_double(eps0);
  }
  double p, eps0;
};

struct GeneratorModel final : ScheduleModel {
  GeneratorModel(double c, EpsilonSchedule::Function h, std::string generator_name) : c(c) {
    name = std::move(generator_name);
    generator = std::move(h);
    h_table_ = CumulativeTable([this](double s) {
      const double v = generator(s);
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("generator schedule: h must be positive and finite");
      return v;
    });
    build_table();
  }
  double eval(double t) const override { return std::pow(c + h_table_.at(t), -2.0 / 3.0); }
  double deriv(double t) const override {
    return -(2.0 / 3.0) * generator(t) * std::pow(c + h_table_.at(t), -5.0 / 3.0);
  }
  ScheduleKind kind() const override { return ScheduleKind::generator; }
  std::vector<double> params() const override { return {c}; }
  std::string label() const override { return "generator:" + name + ":c=" + short_double(c); }
  double c;

 private:
  CumulativeTable h_table_;
};

struct CustomModel final : ScheduleModel {
  CustomModel(EpsilonSchedule::Function e, EpsilonSchedule::Function d, std::string label_text)
      : e(std::move(e)), d(std::move(d)) {
    name = std::move(label_text);
    build_table();
  }
  double eval(double t) const override { return e(t); }
  double deriv(double t) const override { return d(t); }
  ScheduleKind kind() const override { return ScheduleKind::custom; }
  std::string label() const override { return "custom:" + name; }
  EpsilonSchedule::Function e, d;
};

}  // namespace
}  // namespace detail

EpsilonSchedule EpsilonSchedule::log() {
  static const auto model = std::make_shared<const detail::LogModel>();
  return EpsilonSchedule(model);
}

EpsilonSchedule EpsilonSchedule::loglog() {
  static const auto model = std::make_shared<const detail::LogLogModel>();
  return EpsilonSchedule(model);
}

EpsilonSchedule EpsilonSchedule::power(double p, double eps0) {
  if (!(p > 0.0)) throw std::invalid_argument("power schedule: p must be positive");
  if (!(p < 2.0 / 3.0))
    throw std::invalid_argument("power schedule: p must be < 2/3, otherwise |eps'|/eps^{5/2} does not vanish");
  if (!(eps0 > 0.0) || !std::isfinite(eps0))
    throw std::invalid_argument("power schedule: eps0 must be positive");
  return EpsilonSchedule(std::make_shared<const detail::PowerModel>(p, eps0));
}

EpsilonSchedule EpsilonSchedule::from_generator(double c, Function h, std::string name) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("generator schedule: c must be positive");
  if (!h) throw std::invalid_argument("generator schedule: empty h");
  return EpsilonSchedule(std::make_shared<const detail::GeneratorModel>(c, std::move(h), std::move(name)));
}

EpsilonSchedule EpsilonSchedule::from_named_generator(const std::string& name, std::optional<double> c) {
  return from_generator(c.value_or(generator_default_c(name)), named_generator(name), name);
}

EpsilonSchedule EpsilonSchedule::custom(Function eval, Function deriv, std::string label) {
  if (!eval || !deriv) throw std::invalid_argument("custom schedule: empty function");
  return EpsilonSchedule(
      std::make_shared<const detail::CustomModel>(std::move(eval), std::move(deriv), std::move(label)));
}

double EpsilonSchedule::eval(double t) const { return model_->eval(t); }
double EpsilonSchedule::derivative(double t) const { return model_->deriv(t); }
double EpsilonSchedule::primitive(double t) const { return model_->primitive(t); }
double EpsilonSchedule::integral(double a, double b) const { return model_->integral(a, b); }
double EpsilonSchedule::decay_ratio(double t) const {
  return std::abs(derivative(t)) / std::pow(eval(t), 2.5);
}
ScheduleKind EpsilonSchedule::kind() const { return model_->kind(); }
std::vector<double> EpsilonSchedule::params() const { return model_->params(); }
const std::string& EpsilonSchedule::name() const { return model_->name; }
std::string EpsilonSchedule::label() const { return model_->label(); }
const EpsilonSchedule::Function& EpsilonSchedule::generator() const { return model_->generator; }

EpsilonSchedule::Function named_generator(const std::string& name) {
  if (name == "paper_loglog")
    return [](double s) { return 1.0 / ((2.0 + s) * std::log(2.0 + s)); };
  throw std::invalid_argument("unknown generator '" + name + "'");
}

double generator_default_c(const std::string& name) {
  if (name == "paper_loglog") return 1.0 + std::log(std::log(2.0));
  throw std::invalid_argument("unknown generator '" + name + "'");
}

EpsilonSchedule schedule_from_json(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("kind")) throw std::invalid_argument("schedule spec: missing \"kind\"");
  const auto kind = spec.at("kind").get<std::string>();
  if (kind == "log") return EpsilonSchedule::log();
  if (kind == "loglog") return EpsilonSchedule::loglog();
  if (kind == "power")
    return EpsilonSchedule::power(spec.at("p").get<double>(), spec.value("eps0", 1.0));
  if (kind == "generator") {
    std::optional<double> c;
    if (spec.contains("c")) c = spec.at("c").get<double>();
    return EpsilonSchedule::from_named_generator(spec.at("h").get<std::string>(), c);
  }
  throw std::invalid_argument("schedule spec: unknown kind '" + kind + "'");
}

nlohmann::json schedule_to_json(const EpsilonSchedule& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind());
  const auto p = s.params();
  switch (s.kind()) {
    case ScheduleKind::power:
      j["p"] = p[0];
      j["eps0"] = p[1];
      break;
    case ScheduleKind::generator:
      j["c"] = p[0];
      j["h"] = s.name();
      break;
    case ScheduleKind::custom:
      j["label"] = s.name();
      break;
    default:
      break;
  }
  return j;
}

nlohmann::json CertificationReport::to_json() const {
  nlohmann::json j;
  j["certified"] = certified;
  j["checks"] = {{"positive", positive},
                 {"nonincreasing", nonincreasing},
                 {"decays_to_zero", decays_to_zero},
                 {"ratio_vanishes", ratio_vanishes},
                 {"divergent", divergent},
                 {"derivative_consistent", derivative_consistent}};
  j["witness"] = {{"t_max", t_max},
                  {"n_samples", n_samples},
                  {"min_eps", min_eps},
                  {"ratio_first_decade", ratio_first_decade},
                  {"ratio_last_decade", ratio_last_decade},
                  {"ratio_tail_slope", ratio_tail_slope},
                  {"tail_drop", tail_drop},
                  {"primitive_growth", primitive_growth},
                  {"max_derivative_error", max_derivative_error}};
  j["lower_bound"] = {{"c0", lower_bound_c0}, {"c", lower_bound_c}, {"holds", lower_bound_holds}};
  if (generator_vanishes) j["generator_vanishes"] = *generator_vanishes;
  return j;
}

CertificationReport validate(const EpsilonSchedule& s, double t_max, std::size_t n_samples) {
  if (!(t_max >= 100.0)) throw std::invalid_argument("validate: t_max must be >= 100");
  if (n_samples < 64) throw std::invalid_argument("validate: n_samples must be >= 64");

  CertificationReport r;
  r.t_max = t_max;
  r.n_samples = n_samples;

  std::vector<double> grid{0.0};
  const double top = std::log10(t_max);
  for (std::size_t i = 0; i < n_samples; ++i)
    grid.push_back(std::pow(10.0, top * static_cast<double>(i) / static_cast<double>(n_samples - 1)));
  grid.back() = t_max;

  std::vector<double> eps(grid.size()), der(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    eps[i] = s.eval(grid[i]);
    der[i] = s.derivative(grid[i]);
  }

  r.min_eps = *std::min_element(eps.begin(), eps.end());
  r.positive = std::all_of(eps.begin(), eps.end(), [](double e) { return e > 0.0 && std::isfinite(e); });

  r.nonincreasing = true;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(eps[i] <= eps[i - 1] * (1.0 + 1e-12))) r.nonincreasing = false;

  r.tail_drop = s.eval(t_max) / s.eval(t_max / 10.0);
  r.decays_to_zero = std::isfinite(r.tail_drop) && r.tail_drop <= 1.0 - 1e-3;

  // Trend of |eps'| / eps^{5/2}: it must not grow, and over the last two
  // decades its log-log slope must be clearly negative. A power law t^{-q}
  // passes for q >= 1e-3, i.e. eps0 (1+t)^{-p} for p <= 0.666.
  double first = 0.0, last = 0.0;
  bool ratios_finite = true;
  bool tail_zero = true;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, n_tail = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double ratio = std::abs(der[i]) / std::pow(eps[i], 2.5);
    if (!std::isfinite(ratio)) ratios_finite = false;
    if (grid[i] <= 10.0) first = std::max(first, ratio);
    if (grid[i] >= t_max / 10.0) last = std::max(last, ratio);
    if (grid[i] >= t_max / 100.0) {
      if (ratio > 0.0) {
        tail_zero = false;
        const double x = std::log(grid[i]), y = std::log(ratio);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n_tail += 1.0;
      } else {
        n_tail = -INFINITY;  // mixed zero and nonzero ratios: no slope
      }
    }
  }
  r.ratio_first_decade = first;
  r.ratio_last_decade = last;
  if (n_tail >= 2.0) r.ratio_tail_slope = (n_tail * sxy - sx * sy) / (n_tail * sxx - sx * sx);
  r.ratio_vanishes = ratios_finite && (tail_zero || (n_tail >= 2.0 && r.ratio_tail_slope <= -1e-3 && last <= first));

  const double p_hi = s.primitive(t_max);
  const double p_lo = s.primitive(t_max / 10.0);
  r.primitive_growth = p_hi / p_lo;
  r.divergent = std::isfinite(p_hi) && p_lo > 0.0 && p_hi >= 1.5 * p_lo;

  // Five-point central differences; the absolute floor absorbs the rounding
  // (and quadrature) noise of eval, amplified by 1/step.
  r.derivative_consistent = true;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double t = grid[i];
    const double step = 1e-3 * t;
    const double fd = (-s.eval(t + 2 * step) + 8 * s.eval(t + step) - 8 * s.eval(t - step) +
                       s.eval(t - 2 * step)) /
                      (12 * step);
    const double err = std::abs(fd - der[i]);
    const double allowed = 1e-6 * std::abs(der[i]) + 1e-12 * std::abs(eps[i]) / step;
    if (!(err <= allowed)) r.derivative_consistent = false;
    if (std::abs(der[i]) > 0.0) r.max_derivative_error = std::max(r.max_derivative_error, err / std::abs(der[i]));
  }

  r.lower_bound_c0 = 1.0 / eps[0];
  for (std::size_t i = 0; i < grid.size(); ++i)
    r.lower_bound_c = std::max(r.lower_bound_c, std::abs(der[i]) / (eps[i] * eps[i]));
  r.lower_bound_holds = std::isfinite(r.lower_bound_c);
  for (std::size_t i = 0; i < grid.size() && r.lower_bound_holds; ++i)
    if (eps[i] < (1.0 - 1e-12) / (r.lower_bound_c0 + r.lower_bound_c * grid[i])) r.lower_bound_holds = false;

  if (s.kind() == ScheduleKind::generator) {
    const auto& h = s.generator();
    bool vanishes = h(t_max) < 0.1 * h(0.0);
    for (std::size_t i = 1; i < grid.size() && vanishes; ++i)
      if (grid[i] >= t_max / 10.0 && h(grid[i]) > h(grid[i - 1])) vanishes = false;
    r.generator_vanishes = vanishes;
  }

  r.certified = r.positive && r.nonincreasing && r.decays_to_zero && r.ratio_vanishes && r.divergent &&
                r.derivative_consistent;
  return r;
}

double invert(const EpsilonSchedule& s, double beta) {
  if (!(beta > 0.0)) throw std::domain_error("invert: beta must be positive");
  const double eps0 = s.initial();
  if (beta >= eps0) {
    if (beta <= eps0 * (1.0 + 4 * std::numeric_limits<double>::epsilon())) return 0.0;
    throw std::domain_error("invert: beta exceeds eps(0), no stopping time exists");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (s.eval(hi) > beta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw std::domain_error("invert: eps(t) = beta is not reached at representable t");
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (s.eval(mid) > beta)
      lo = mid;
    else
      hi = mid;
  }
  // Pick the endpoint whose value is closer to beta.
  return std::abs(s.eval(lo) - beta) <= std::abs(s.eval(hi) - beta) ? lo : hi;
}

}  // namespace dsmreg
