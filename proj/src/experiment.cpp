#include "dsmreg/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>

#include "dsmreg/matrix_io.hpp"
#include "dsmreg/problems.hpp"
#include "dsmreg/solver.hpp"

namespace dsmreg {

namespace {

struct PreparedProblem {
  std::optional<ProblemInstance> instance;
  std::optional<SpectralDecomposition<double>> decomp;
  std::string label;
  std::string error;
};

struct PreparedSchedule {
  std::optional<EpsilonSchedule> schedule;
  std::string label;
  std::string error;
};

struct Job {
  std::size_t problem, schedule, rule, delta, seed;
};

std::string csv_text(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

std::string csv_number(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

// Reads u, w at the end of a trajectory (or at t = 0 when no time elapses).
void fill_observations(RunRecord& rec, const NormalSystem<double>& sys, const SpectralDecomposition<double>& decomp,
                       const EpsilonSchedule& s, const Vector& y, double t_read, double tol, int per_decade,
                       const std::optional<std::filesystem::path>& dump) {
  const Vector u0 = Vector::Zero(sys.size());
  rec.t_read = t_read;
  if (t_read == 0.0) {
    const Vector w = tikhonov_solve(sys, s.initial());
    rec.err_u = (u0 - y).norm();
    rec.err_w = (w - y).norm();
    rec.g = (u0 - w).norm();
    rec.gronwall_bound = rec.g;
    return;
  }
  const Trajectory traj = integrate(sys, decomp, s, u0, t_read, tol, log_record_grid(t_read, per_decade), y);
  rec.err_u = traj.error_values.back();
  rec.err_w = (traj.tikhonov_path.back() - y).norm();
  rec.g = traj.g_values.back();
  rec.gronwall_bound = traj.gronwall_bounds.back();
  if (dump) write_trajectory(*dump, traj);
}

RunRecord execute(const ExperimentConfig& cfg, const PreparedProblem& prob, const PreparedSchedule& sched,
                  const Job& job, std::size_t index) {
  RunRecord rec;
  rec.problem = prob.label;
  rec.schedule = sched.label;
  rec.rule = cfg.rules[job.rule].label();
  rec.delta = cfg.deltas[job.delta];
  rec.seed = cfg.seeds[job.seed];

  const auto start = std::chrono::steady_clock::now();
  try {
    if (!prob.instance) throw std::runtime_error(prob.error);
    if (!sched.schedule) throw std::runtime_error(sched.error);
    const ProblemInstance& inst = *prob.instance;
    const SpectralDecomposition<double>& decomp = *prob.decomp;
    const EpsilonSchedule& s = *sched.schedule;
    const RuleSpec& rule = cfg.rules[job.rule];
    const double c = inst.op.norm_bound();

    std::optional<std::filesystem::path> dump;
    if (cfg.write_trajectories)
      dump = cfg.output_dir / "trajectories" / ("run-" + std::to_string(index));

    if (rec.delta == 0.0) {
      const NormalSystem<double> sys = normal_system(inst);
      const double t_end = invert(s, s.initial() / 100.0);
      fill_observations(rec, sys, decomp, s, inst.y_true, t_end, cfg.integrator_tol, cfg.records_per_decade, dump);
    } else {
      const ProblemInstance noisy = add_noise(inst, rec.delta, rec.seed);
      const NormalSystem<double> sys = normal_system(noisy);
      StoppingResult stop;
      switch (rule.rule) {
        case StoppingRule::oracle:
          stop = oracle_stop(decomp, inst.y_true, rec.delta, s);
          break;
        case StoppingRule::apriori:
          stop = apriori_stop(rule.a, rule.R, inst.op.norm_bound_sq(), rec.delta, s);
          break;
        case StoppingRule::appendix: {
          // Beyond eps(t) < c delta / (a(0) + c delta / eps(0)) the objective
          // exceeds its value at t = 0, so the minimizer lies before that time.
          const double a0 = inst.y_true.norm();
          const double beta_h = c * rec.delta / (a0 + c * rec.delta / s.initial());
          const double horizon = invert(s, beta_h);
          if (horizon == 0.0) {
            stop.rule = StoppingRule::appendix;
            stop.t_stop = 0.0;
            stop.eta = a0;
            break;
          }
          const NormalSystem<double> clean = normal_system(inst);
          const Trajectory traj = integrate(clean, decomp, s, Vector::Zero(inst.size()), horizon,
                                            cfg.integrator_tol, log_record_grid(horizon, cfg.records_per_decade),
                                            inst.y_true);
          stop = appendix_stop(traj, rec.delta, c);
          break;
        }
      }
      rec.beta = stop.beta;
      rec.t_delta = stop.t_stop;
      rec.eta = stop.eta;
      fill_observations(rec, sys, decomp, s, inst.y_true, stop.t_stop, cfg.integrator_tol, cfg.records_per_decade,
                        dump);
      rec.appendix_bound = appendix_bound(s, rec.delta, c, stop.t_stop);
      if (rule.rule == StoppingRule::oracle) rec.eta_violation = rec.err_w > *rec.eta * (1.0 + 1e-6);
    }
  } catch (const std::domain_error& e) {
    rec.status = "skipped";
    rec.reason = e.what();
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.reason = e.what();
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (problems.empty()) throw std::invalid_argument("config: no problems");
  if (schedules.empty()) throw std::invalid_argument("config: no schedules");
  if (rules.empty()) throw std::invalid_argument("config: no rules");
  if (deltas.empty()) throw std::invalid_argument("config: no deltas");
  if (seeds.empty()) throw std::invalid_argument("config: no seeds");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] >= 0.0) || !std::isfinite(deltas[i])) throw std::invalid_argument("config: invalid delta");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw std::invalid_argument("config: deltas must be strictly decreasing");
  }
  if (!(integrator_tol >= 1e-12 && integrator_tol <= 1e-3))
    throw std::invalid_argument("config: integrator_tol must lie in [1e-12, 1e-3]");
  if (records_per_decade < 1) throw std::invalid_argument("config: records_per_decade must be >= 1");
  if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  for (const auto& p : j.at("problems")) cfg.problems.push_back(p);
  for (const auto& s : j.at("schedules")) cfg.schedules.push_back(s);
  for (const auto& r : j.at("rules")) cfg.rules.push_back(rule_from_json(r));
  cfg.deltas = j.at("deltas").get<std::vector<double>>();
  cfg.integrator_tol = j.value("integrator_tol", cfg.integrator_tol);
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.output_dir = j.value("output_dir", cfg.output_dir.string());
  cfg.records_per_decade = j.value("records_per_decade", cfg.records_per_decade);
  cfg.write_trajectories = j.value("trajectories", cfg.write_trajectories);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.validate();
  return cfg;
}

std::size_t ExperimentResult::violations() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.eta_violation ? 1 : 0;
  return n;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
  double mx = 0.0, my = 0.0;
  for (const auto& [d, e] : points) {
    if (!(d > 0.0) || !(e > 0.0)) throw std::invalid_argument("fit_rate: values must be positive");
    mx += std::log(d);
    my += std::log(e);
  }
  const double n = static_cast<double>(points.size());
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [d, e] : points) {
    const double dx = std::log(d) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(e) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: all deltas are equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  double ssr = 0.0;
  for (const auto& [d, e] : points) {
    const double r = std::log(e) - my - fit.slope * (std::log(d) - mx);
    ssr += r * r;
  }
  fit.stderr_ = points.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return fit;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  std::vector<PreparedProblem> problems(cfg.problems.size());
  for (std::size_t i = 0; i < cfg.problems.size(); ++i) {
    auto& p = problems[i];
    try {
      p.instance = problem_from_spec(cfg.problems[i]);
      p.label = p.instance->label;
      p.decomp = spectral_decompose(normal_system(*p.instance));
    } catch (const std::exception& e) {
      p.label = cfg.problems[i].dump();
      p.error = e.what();
    }
  }
  std::vector<PreparedSchedule> schedules(cfg.schedules.size());
  for (std::size_t i = 0; i < cfg.schedules.size(); ++i) {
    auto& s = schedules[i];
    try {
      s.schedule = schedule_from_json(cfg.schedules[i]);
      s.label = s.schedule->label();
    } catch (const std::exception& e) {
      s.label = cfg.schedules[i].dump();
      s.error = e.what();
    }
  }

  std::vector<Job> jobs;
  for (std::size_t p = 0; p < problems.size(); ++p)
    for (std::size_t s = 0; s < schedules.size(); ++s)
      for (std::size_t r = 0; r < cfg.rules.size(); ++r)
        for (std::size_t d = 0; d < cfg.deltas.size(); ++d)
          for (std::size_t k = 0; k < cfg.seeds.size(); ++k) jobs.push_back({p, s, r, d, k});

  if (cfg.write_trajectories) std::filesystem::create_directories(cfg.output_dir / "trajectories");

  ExperimentResult result;
  result.records.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      result.records[i] = execute(cfg, problems[job.problem], schedules[job.schedule], job, i);
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, cfg.jobs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(n_threads, jobs.size()); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Rate fits per (problem, rule), pooled over schedules and seeds.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<double, double>>> groups;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& rec = result.records[i];
    if (rec.status == "ok" && rec.delta > 0.0 && rec.err_u > 0.0)
      groups[{jobs[i].problem, jobs[i].rule}].emplace_back(rec.delta, rec.err_u);
    else
      groups[{jobs[i].problem, jobs[i].rule}];
  }
  for (const auto& [key, points] : groups) {
    RateSummary summary;
    summary.problem = problems[key.first].label;
    summary.rule = cfg.rules[key.second].label();
    summary.n_points = points.size();
    if (points.size() >= 3) {
      try {
        const RateFit fit = fit_rate(points);
        summary.slope = fit.slope;
        summary.stderr_ = fit.stderr_;
      } catch (const std::invalid_argument&) {
        summary.slope = std::nan("");
        summary.stderr_ = std::nan("");
      }
    } else {
      summary.slope = std::nan("");
      summary.stderr_ = std::nan("");
    }
    result.rates.push_back(summary);
  }
  return result;
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "problem,schedule,rule,delta,seed,status,beta,t_delta,eta,t_read,err_u,err_w,g,gronwall_bound,"
         "appendix_bound,eta_violation,reason\n";
  for (const auto& r : records) {
    out << csv_text(r.problem) << ',' << csv_text(r.schedule) << ',' << csv_text(r.rule) << ','
        << format_double(r.delta) << ',' << r.seed << ',' << r.status << ',' << csv_number(r.beta) << ','
        << csv_number(r.t_delta) << ',' << csv_number(r.eta) << ',';
    if (r.status == "ok") {
      out << format_double(r.t_read) << ',' << format_double(r.err_u) << ',' << format_double(r.err_w) << ','
          << format_double(r.g) << ',' << format_double(r.gronwall_bound) << ','
          << format_double(r.appendix_bound) << ',';
    } else {
      out << ",,,,,,";
    }
    out << (r.eta_violation ? 1 : 0) << ',' << csv_text(r.reason) << '\n';
  }
}

void write_rates_csv(std::ostream& out, const std::vector<RateSummary>& rates) {
  out << "problem,rule,slope,stderr,n_points\n";
  for (const auto& r : rates)
    out << csv_text(r.problem) << ',' << csv_text(r.rule) << ',' << format_double(r.slope) << ','
        << format_double(r.stderr_) << ',' << r.n_points << '\n';
}

void write_results(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::filesystem::create_directories(cfg.output_dir);
  auto open = [&](const char* name) {
    std::ofstream out(cfg.output_dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (cfg.output_dir / name).string());
    return out;
  };
  {
    auto out = open("runs.csv");
    write_runs_csv(out, result.records);
  }
  {
    auto out = open("rates.csv");
    write_rates_csv(out, result.rates);
  }
  auto out = open("timings.csv");
  out << "problem,schedule,rule,delta,seed,wall_time_s\n";
  for (const auto& r : result.records)
    out << csv_text(r.problem) << ',' << csv_text(r.schedule) << ',' << csv_text(r.rule) << ','
        << format_double(r.delta) << ',' << r.seed << ',' << format_double(r.wall_time) << '\n';
}

}  // namespace dsmreg
