#ifndef DSMREG_EXPERIMENT_HPP
#define DSMREG_EXPERIMENT_HPP

// delta-sweeps over problems x schedules x stopping rules, with bound checks
// and least-squares convergence-rate fits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsmreg/schedule.hpp"
#include "dsmreg/stopping.hpp"

namespace dsmreg {

struct ExperimentConfig {
  std::vector<nlohmann::json> problems;
  std::vector<nlohmann::json> schedules;
  std::vector<RuleSpec> rules;
  std::vector<double> deltas;  // strictly decreasing; a trailing 0 requests a noiseless run
  double integrator_tol = 1e-6;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "out";
  int records_per_decade = 32;
  bool write_trajectories = false;
  int jobs = 1;

  /// Throws std::invalid_argument on an invalid config.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);

struct RunRecord {
  std::string problem;
  std::string schedule;
  std::string rule;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | skipped | error
  std::string reason;

  std::optional<double> beta;
  std::optional<double> t_delta;
  std::optional<double> eta;  // eta(delta), mu(delta) for the appendix rule
  double t_read = 0.0;        // t_delta, or t_end for a noiseless run
  double err_u = 0.0;         // ||u(t_read) - y||
  double err_w = 0.0;         // ||w(t_read) - y||
  double g = 0.0;             // ||u(t_read) - w(t_read)||
  double gronwall_bound = 0.0;
  double appendix_bound = 0.0;
  bool eta_violation = false;
  double wall_time = 0.0;     // seconds; reported separately from runs.csv
};

struct RateSummary {
  std::string problem;
  std::string rule;
  double slope = 0.0;
  double stderr_ = 0.0;
  std::size_t n_points = 0;
};

struct ExperimentResult {
  std::vector<RunRecord> records;  // canonical order: problem, schedule, rule, delta, seed
  std::vector<RateSummary> rates;

  std::size_t violations() const;
};

struct RateFit {
  double slope = 0.0;
  double stderr_ = 0.0;
};

/// Ordinary least squares of log(err) against log(delta).
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes runs.csv, rates.csv and timings.csv into cfg.output_dir.
void write_results(const ExperimentConfig& cfg, const ExperimentResult& result);

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records);
void write_rates_csv(std::ostream& out, const std::vector<RateSummary>& rates);

}  // namespace dsmreg

#endif  // DSMREG_EXPERIMENT_HPP
