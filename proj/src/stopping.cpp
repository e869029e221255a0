#include "dsmreg/stopping.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dsmreg {

namespace {

constexpr int kScanPoints = 600;
constexpr double kBracketFloor = 1e-14;
constexpr double kBetaRelTol = 1e-6;

std::string short_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

StoppingResult finish(StoppingRule rule, double beta, double eta, const EpsilonSchedule& s) {
  if (beta > s.initial())
    throw std::domain_error("stopping: beta(delta) = " + short_double(beta) + " exceeds eps(0) = " +
                            short_double(s.initial()) + "; the schedule starts below the required regularization");
  StoppingResult r;
  r.rule = rule;
  r.beta = beta;
  r.eta = eta;
  r.t_stop = invert(s, beta);
  return r;
}

}  // namespace

std::string to_string(StoppingRule rule) {
  switch (rule) {
    case StoppingRule::oracle: return "oracle";
    case StoppingRule::apriori: return "apriori";
    case StoppingRule::appendix: return "appendix";
  }
  return "unknown";
}

double stopping_objective(const SpectralDecomposition<double>& decomp, const Vector& y, double delta,
                          double beta) {
  return phi(decomp, y, beta) + delta / (2.0 * std::sqrt(beta));
}

Minimizer minimize_h(const SpectralDecomposition<double>& decomp, const Vector& y, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("minimize_h: delta must be positive");
  if (y.size() != decomp.size()) throw std::invalid_argument("minimize_h: size mismatch");
  if (y.norm() == 0.0)
    throw std::domain_error("minimize_h: y = 0 makes phi vanish; the minimizer escapes to infinity");

  const double top = std::log(decomp.norm());
  const double bottom = std::log(kBracketFloor * decomp.norm());
  auto objective = [&](double log_beta) { return stopping_objective(decomp, y, delta, std::exp(log_beta)); };

  const double spacing = (top - bottom) / (kScanPoints - 1);
  int best = 0;
  double best_value = objective(bottom);
  for (int i = 1; i < kScanPoints; ++i) {
    const double v = objective(bottom + spacing * i);
    if (v < best_value) {  // strict: keeps the smallest minimizer on ties
      best = i;
      best_value = v;
    }
  }

  Minimizer out;
  double lo = bottom + spacing * std::max(0, best - 1);
  double hi = bottom + spacing * std::min(kScanPoints - 1, best + 1);
  out.bracket_lo = std::exp(lo);
  out.bracket_hi = std::exp(hi);

  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > kBetaRelTol * 1e-2) {  // interval in log(beta): 1e-8 << 1e-6 relative
    ++out.iterations;
    if (f1 <= f2) {  // ties move left, towards the smaller minimizer
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = objective(x2);
    }
  }
  double log_beta = 0.5 * (lo + hi);
  double value = objective(log_beta);
  // The bracket endpoints can win when the minimum sits on the search boundary.
  for (double candidate : {bottom + spacing * best, lo, hi}) {
    const double v = objective(candidate);
    if (v < value || (v == value && candidate < log_beta)) {
      value = v;
      log_beta = candidate;
    }
  }
  out.beta = std::exp(log_beta);
  out.eta = value;
  return out;
}

StoppingResult oracle_stop(const SpectralDecomposition<double>& decomp, const Vector& y, double delta,
                           const EpsilonSchedule& s) {
  const Minimizer m = minimize_h(decomp, y, delta);
  StoppingResult r = finish(StoppingRule::oracle, m.beta, m.eta, s);
  r.bracket_lo = m.bracket_lo;
  r.bracket_hi = m.bracket_hi;
  r.iterations = m.iterations;
  return r;
}

StoppingResult apriori_stop(double a, double R, double m, double delta, const EpsilonSchedule& s) {
  if (!(a > 0.0)) throw std::domain_error("apriori_stop: a must be positive");
  if (!(R > 0.0)) throw std::domain_error("apriori_stop: R must be positive");
  if (!(m > 0.0)) throw std::domain_error("apriori_stop: m must be positive");
  if (!(delta > 0.0)) throw std::domain_error("apriori_stop: delta must be positive");
  double beta = 0.0;
  double eta = 0.0;
  if (a >= 1.0) {
    // Stationary point of delta / (2 sqrt(beta)) + beta K, K = m^{a-1} R.
    const double k = std::pow(m, a - 1.0) * R;
    beta = std::pow(delta / (4.0 * k), 2.0 / 3.0);
    eta = beta * k + delta / (2.0 * std::sqrt(beta));
  } else {
    // Stationary point of delta / (2 sqrt(beta)) + beta^a R.
    beta = std::pow(delta / (4.0 * a * R), 2.0 / (2.0 * a + 1.0));
    eta = std::pow(beta, a) * R + delta / (2.0 * std::sqrt(beta));
  }
  StoppingResult r = finish(StoppingRule::apriori, beta, eta, s);
  r.source_a = a;
  return r;
}

StoppingResult appendix_stop(const Trajectory& traj, double delta, double c) {
  if (!traj.has_errors()) throw std::invalid_argument("appendix_stop: trajectory carries no error values");
  if (!(delta >= 0.0)) throw std::domain_error("appendix_stop: delta must be nonnegative");
  StoppingResult r;
  r.rule = StoppingRule::appendix;
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double v = c * delta / traj.eps_values[i] + traj.error_values[i];
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  r.t_stop = traj.times[best];
  r.eta = best_value;
  r.bracket_lo = traj.times.front();
  r.bracket_hi = traj.times.back();
  r.iterations = static_cast<int>(traj.size());
  return r;
}

std::string RuleSpec::label() const {
  if (rule == StoppingRule::apriori) return "apriori:a=" + short_double(a) + ":R=" + short_double(R);
  return to_string(rule);
}

RuleSpec rule_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rule")) throw std::invalid_argument("rule spec: missing \"rule\"");
  const auto name = j.at("rule").get<std::string>();
  RuleSpec r;
  if (name == "oracle") {
    r.rule = StoppingRule::oracle;
  } else if (name == "apriori") {
    r.rule = StoppingRule::apriori;
    r.a = j.value("a", 1.0);
    r.R = j.value("R", 1.0);
    if (!(r.a > 0.0) || !(r.R > 0.0)) throw std::invalid_argument("rule spec: apriori needs a > 0 and R > 0");
  } else if (name == "appendix") {
    r.rule = StoppingRule::appendix;
  } else {
    throw std::invalid_argument("rule spec: unknown rule '" + name + "'");
  }
  return r;
}

nlohmann::json rule_to_json(const RuleSpec& r) {
  nlohmann::json j{{"rule", to_string(r.rule)}};
  if (r.rule == StoppingRule::apriori) {
    j["a"] = r.a;
    j["R"] = r.R;
  }
  return j;
}

}  // namespace dsmreg
