#include "dsmreg/problems.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "dsmreg/matrix_io.hpp"

namespace dsmreg {

namespace {

std::string short_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

Vector midpoints(int n) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = (i + 0.5) / n;
  return x;
}

ProblemInstance make_instance(Matrix a, Vector y, std::string kind, std::string label) {
  ProblemInstance inst{DenseOperator<double>(std::move(a)), std::move(y), {}, {}, 0.0, 0, std::move(kind),
                       std::move(label)};
  inst.f_clean = inst.op.apply(inst.y_true);
  inst.f_noisy = inst.f_clean;
  return inst;
}

}  // namespace

PortableRng::PortableRng(std::uint64_t seed) : engine_(seed) {}

double PortableRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double PortableRng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

Vector PortableRng::normal_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Vector PortableRng::unit_vector(Eigen::Index n) {
  Vector v = normal_vector(n);
  const double norm = v.norm();
  if (!(norm > 0.0)) throw std::runtime_error("PortableRng: degenerate normal draw");
  return v / norm;
}

TargetSpec target_from_string(const std::string& s) {
  if (s == "ones") return TargetSpec::ones;
  if (s == "smooth") return TargetSpec::smooth;
  if (s == "seeded") return TargetSpec::seeded;
  throw std::invalid_argument("unknown target spec '" + s + "'");
}

FredholmKind fredholm_from_string(const std::string& s) {
  if (s == "gravity") return FredholmKind::gravity;
  if (s == "deriv2") return FredholmKind::deriv2;
  throw std::invalid_argument("unknown Fredholm kind '" + s + "'");
}

std::string to_string(FredholmKind kind) {
  return kind == FredholmKind::gravity ? "gravity" : "deriv2";
}

ProblemInstance hilbert_problem(int n, TargetSpec target, std::uint64_t seed) {
  if (n < 2 || n > 256) throw std::invalid_argument("hilbert_problem: n must lie in [2, 256]");
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = 1.0 / (i + j + 1);
  Vector y;
  switch (target) {
    case TargetSpec::ones: y = Vector::Ones(n); break;
    case TargetSpec::smooth: y = (-midpoints(n).array()).exp(); break;
    case TargetSpec::seeded: {
      PortableRng rng(seed);
      y = rng.normal_vector(n);
      break;
    }
  }
  ProblemInstance inst = make_instance(std::move(a), std::move(y), "hilbert", "hilbert-" + std::to_string(n));
  inst.seed = seed;
  return inst;
}

ProblemInstance fredholm_problem(FredholmKind kind, int n) {
  if (n < 8 || n > 256) throw std::invalid_argument("fredholm_problem: n must lie in [8, 256]");
  const Vector x = midpoints(n);
  Matrix a(n, n);
  Vector y(n);
  if (kind == FredholmKind::gravity) {
    constexpr double d = 0.25;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double r = x(i) - x(j);
        a(i, j) = d * std::pow(d * d + r * r, -1.5) / n;
      }
    for (int i = 0; i < n; ++i)
      y(i) = std::sin(std::numbers::pi * x(i)) + 0.5 * std::sin(2.0 * std::numbers::pi * x(i));
  } else {
    const double scale = std::numbers::pi * std::numbers::pi;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double s = x(i), t = x(j);
        const double k = s < t ? s * (t - 1.0) : t * (s - 1.0);
        a(i, j) = scale * k / n;
      }
    y = x.array() * (1.0 - x.array());
  }
  const std::string name = to_string(kind);
  return make_instance(std::move(a), std::move(y), name, name + "-" + std::to_string(n));
}

double fredholm_norm_bound(FredholmKind kind, int n) {
  if (kind == FredholmKind::gravity) {
    constexpr double d = 0.25;
    return 2.0 / d + 1.0 / (d * d * n);
  }
  return std::numbers::pi * std::numbers::pi / 8.0;
}

Vector source_condition_target(const SpectralDecomposition<double>& decomp, double a, const Vector& h) {
  if (!(a > 0.0)) throw std::domain_error("source_condition_target: a must be positive");
  if (h.size() != decomp.size()) throw std::invalid_argument("source_condition_target: size mismatch");
  return decomp.apply(h, [a](double lambda) { return std::pow(lambda, a); });
}

Vector source_condition_target(const NormalSystem<double>& sys, double a, const Vector& h) {
  return source_condition_target(spectral_decompose(sys), a, h);
}

ProblemInstance with_target(ProblemInstance inst, Vector y, const std::string& label_suffix) {
  if (y.size() != inst.size()) throw std::invalid_argument("with_target: size mismatch");
  inst.y_true = std::move(y);
  inst.f_clean = inst.op.apply(inst.y_true);
  inst.f_noisy = inst.f_clean;
  inst.delta = 0.0;
  inst.label += label_suffix;
  return inst;
}

ProblemInstance add_noise(ProblemInstance inst, double delta, std::uint64_t seed) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::domain_error("add_noise: delta must be positive");
  PortableRng rng(seed);
  inst.f_noisy = inst.f_clean + delta * rng.unit_vector(inst.f_clean.size());
  inst.delta = delta;
  inst.seed = seed;
  return inst;
}

NormalSystem<double> normal_system(const ProblemInstance& inst) {
  return build_normal_system(inst.op, inst.f_noisy, std::optional<Vector>(inst.f_clean), inst.delta);
}

ProblemInstance problem_from_spec(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("kind")) throw std::invalid_argument("problem spec: missing \"kind\"");
  const auto kind = spec.at("kind").get<std::string>();
  const int n = spec.value("n", kind == "hilbert" ? 8 : 32);
  ProblemInstance inst = kind == "hilbert"
                             ? hilbert_problem(n, target_from_string(spec.value("y", std::string("ones"))),
                                               spec.value("seed", std::uint64_t{0}))
                             : fredholm_problem(fredholm_from_string(kind), n);
  if (kind == "hilbert" && spec.contains("y")) inst.label += ":" + spec.at("y").get<std::string>();
  if (spec.contains("source")) {
    const auto& src = spec.at("source");
    const double a = src.value("a", 1.0);
    const double radius = src.value("R", 1.0);
    const auto h_kind = src.value("h", std::string("ones"));
    Vector h;
    if (h_kind == "ones") {
      h = Vector::Ones(n);
    } else if (h_kind == "seeded") {
      PortableRng rng(src.value("seed", std::uint64_t{0}));
      h = rng.normal_vector(n);
    } else {
      throw std::invalid_argument("problem spec: unknown source h '" + h_kind + "'");
    }
    h *= radius / h.norm();
    const auto decomp = spectral_decompose(normal_system(inst));
    Vector y = source_condition_target(decomp, a, h);
    inst = with_target(std::move(inst), std::move(y), ":src:a=" + short_double(a) + ":h=" + h_kind);
  }
  return inst;
}

nlohmann::json problem_to_json(const ProblemInstance& inst) {
  nlohmann::json j = matrix_to_json(inst.op.entries());
  j["label"] = inst.label;
  j["kind"] = inst.kind;
  j["n"] = inst.size();
  j["delta"] = inst.delta;
  j["seed"] = inst.seed;
  j["norm_bound_sq"] = inst.op.norm_bound_sq();
  j["y_true"] = vector_to_json(inst.y_true);
  j["f_clean"] = vector_to_json(inst.f_clean);
  j["f_noisy"] = vector_to_json(inst.f_noisy);
  return j;
}

ProblemInstance problem_from_json(const nlohmann::json& j) {
  std::optional<double> m;
  if (j.contains("norm_bound_sq")) m = j.at("norm_bound_sq").get<double>();
  ProblemInstance inst{DenseOperator<double>(matrix_from_json(j), m),
                       vector_from_json(j.at("y_true")),
                       vector_from_json(j.at("f_clean")),
                       vector_from_json(j.at("f_noisy")),
                       j.value("delta", 0.0),
                       j.value("seed", std::uint64_t{0}),
                       j.value("kind", std::string{}),
                       j.value("label", std::string{})};
  if (inst.y_true.size() != inst.size() || inst.f_clean.size() != inst.op.rows() ||
      inst.f_noisy.size() != inst.op.rows())
    throw FormatError("problem json: vector sizes do not match the operator");
  return inst;
}

}  // namespace dsmreg
