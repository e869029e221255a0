// dsmreg: command-line harness for regularized gradient-flow experiments.
//
//   dsmreg run <config.json> [--out DIR] [--jobs N] [--tol X] [--trajectories]
//   dsmreg validate-schedule <spec.json> [--t-max T] [--samples N]
//   dsmreg problem <hilbert|gravity|deriv2> --n N --emit FILE [--y ones|smooth|seeded]
//                  [--seed S] [--delta D] [--noise-seed S]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsmreg/experiment.hpp"
#include "dsmreg/matrix_io.hpp"
#include "dsmreg/problems.hpp"
#include "dsmreg/schedule.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamical-systems regularization of linear ill-posed problems"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a delta-sweep experiment from a JSON config");
  std::string config_path;
  std::string out_dir;
  int jobs = 0;
  double tol = 0.0;
  bool trajectories = false;
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--tol", tol, "Integrator tolerance (overrides integrator_tol)");
  run->add_flag("--trajectories", trajectories, "Also write per-run trajectory CSV/JSON files");

  auto* validate = app.add_subcommand("validate-schedule", "Certify a schedule spec against the decay conditions");
  std::string spec_path;
  double t_max = 1e6;
  std::size_t samples = 256;
  validate->add_option("spec", spec_path, "Schedule spec (JSON)")->required()->check(CLI::ExistingFile);
  validate->add_option("--t-max", t_max, "Horizon of the trend test")->check(CLI::Range(100.0, 1e300));
  validate->add_option("--samples", samples, "Log-spaced samples")->check(CLI::Range(64, 1 << 24));

  auto* problem = app.add_subcommand("problem", "Emit a test problem as matrix JSON (or operator CSV)");
  std::string kind;
  int n = 0;
  std::string emit;
  std::string target = "ones";
  std::uint64_t seed = 0;
  double delta = 0.0;
  std::uint64_t noise_seed = 0;
  problem->add_option("kind", kind, "hilbert | gravity | deriv2")
      ->required()
      ->check(CLI::IsMember({"hilbert", "gravity", "deriv2"}));
  problem->add_option("--n", n, "Dimension")->required();
  problem->add_option("--emit", emit, "Output file (.json, or .csv for the operator only)")->required();
  problem->add_option("--y", target, "Hilbert exact solution: ones | smooth | seeded")
      ->check(CLI::IsMember({"ones", "smooth", "seeded"}));
  problem->add_option("--seed", seed, "Seed for the seeded Hilbert target");
  problem->add_option("--delta", delta, "Noise level (0 for clean data)")->check(CLI::NonNegativeNumber);
  problem->add_option("--noise-seed", noise_seed, "Seed of the noise direction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      dsmreg::ExperimentConfig cfg = dsmreg::config_from_json(load_json(config_path));
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (jobs > 0) cfg.jobs = jobs;
      if (tol > 0.0) cfg.integrator_tol = tol;
      if (trajectories) cfg.write_trajectories = true;
      cfg.validate();
      const auto result = dsmreg::run_experiment(cfg);
      dsmreg::write_results(cfg, result);
      std::size_t ok = 0;
      for (const auto& r : result.records) ok += r.status == "ok" ? 1 : 0;
      std::cout << "runs: " << result.records.size() << " (ok " << ok << ")\n";
      for (const auto& r : result.rates)
        std::cout << "rate " << r.problem << " " << r.rule << ": slope " << r.slope << " +- " << r.stderr_
                  << " (" << r.n_points << " points)\n";
      std::cout << "eta violations: " << result.violations() << "\n";
      std::cout << "wrote " << (cfg.output_dir / "runs.csv").string() << "\n";
      return result.violations() == 0 ? 0 : 3;
    }
    if (*validate) {
      const auto schedule = dsmreg::schedule_from_json(load_json(spec_path));
      const auto report = dsmreg::validate(schedule, t_max, samples);
      nlohmann::json j = report.to_json();
      j["schedule"] = schedule.label();
      std::cout << j.dump(2) << "\n";
      return report.certified ? 0 : 2;
    }
    if (*problem) {
      dsmreg::ProblemInstance inst =
          kind == "hilbert"
              ? dsmreg::hilbert_problem(n, dsmreg::target_from_string(target), seed)
              : dsmreg::fredholm_problem(dsmreg::fredholm_from_string(kind), n);
      if (delta > 0.0) inst = dsmreg::add_noise(std::move(inst), delta, noise_seed);
      if (emit.size() >= 4 && emit.substr(emit.size() - 4) == ".csv") {
        dsmreg::write_matrix_csv(std::filesystem::path(emit), inst.op.entries());
      } else {
        std::ofstream out(emit, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + emit);
        out << dsmreg::problem_to_json(inst).dump() << "\n";
      }
      std::cout << inst.label << ": cond(A) = " << inst.op.condition_number() << ", wrote " << emit << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "dsmreg: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
