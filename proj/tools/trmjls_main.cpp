/*
 Copyright 2026 The trmjls Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "trmjls/trmjls.hpp"

namespace {

using trmjls::ControlPlant;
using trmjls::FilterPlant;
using trmjls::GainSchedule;
using trmjls::InstanceDocument;

struct Options {
  std::string instance_path;
  std::string out_dir = ".";
  std::string format = "json";
  std::string oracle = "exact";
  std::size_t samples = 0;  // 0: take from instance (default 10000)
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool samples_set = false;
};

std::string fmt6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

const ControlPlant& require_control(const InstanceDocument& instance) {
  if (!instance.control) {
    throw std::invalid_argument("this command needs a control instance");
  }
  return *instance.control;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

trmjls::SimConfig resolve_sim_config(const InstanceDocument& instance,
                                     const Options& opt) {
  trmjls::SimConfig cfg;
  if (instance.simulation) cfg = *instance.simulation;
  if (cfg.samples < 1) cfg.samples = 10000;
  if (opt.samples_set) cfg.samples = opt.samples;
  if (opt.seed_set) cfg.seed = opt.seed;
  return cfg;
}

int cmd_stability(const InstanceDocument& instance) {
  const ControlPlant& plant = require_control(instance);
  const trmjls::StabilityReport report =
      trmjls::is_ms_stable(plant.A, plant.chain);
  const char* method =
      report.rho.method == trmjls::SpectralRadiusResult::Method::Dense
          ? "dense eigendecomposition"
          : "power iteration";
  std::cout << "rho(U_A) = " << fmt6(report.rho.value) << "  ["
            << (report.stable ? "MS-stable" : "not MS-stable") << ", "
            << method << "]\n";
  if (!report.rho.converged) {
    std::cout << "warning: power iteration did not converge; rho is a best "
                 "estimate\n";
    return 1;
  }
  return 0;
}

int cmd_control(const InstanceDocument& instance, const Options& opt) {
  const ControlPlant& plant = require_control(instance);
  const trmjls::ControlSolution sol = trmjls::solve_trmjlq(plant);
  const std::filesystem::path out(opt.out_dir);
  std::filesystem::create_directories(out);
  if (opt.format == "csv") {
    std::ofstream p_os(out / "P.csv");
    char cost_line[64];
    std::snprintf(cost_line, sizeof(cost_line), "# optimal_cost=%.17g\n",
                  sol.optimal_cost);
    p_os << cost_line;
    trmjls::write_schedule_csv(p_os, sol.P);
    std::ofstream g_os(out / "gains.csv");
    trmjls::write_schedule_csv(g_os, sol.gains.gains);
    std::cout << "wrote " << (out / "P.csv").string() << ", "
              << (out / "gains.csv").string() << "\n";
  } else {
    write_text(out / "control_solution.json",
               trmjls::control_solution_to_json(sol).dump(2) + "\n");
    std::cout << "wrote " << (out / "control_solution.json").string() << "\n";
  }
  std::cout << "optimal cost <P(0),(Delta,...,Delta)> = "
            << fmt6(sol.optimal_cost) << "\n";
  return 0;
}

int cmd_filter(const InstanceDocument& instance, const Options& opt) {
  if (!instance.filter) {
    throw std::invalid_argument("this command needs a filter instance");
  }
  const trmjls::FilterSolution sol = trmjls::solve_lmmse(*instance.filter);
  const std::filesystem::path out(opt.out_dir);
  std::filesystem::create_directories(out);
  if (opt.format == "csv") {
    std::ofstream s_os(out / "S.csv");
    trmjls::write_schedule_csv(s_os, sol.S);
    std::ofstream g_os(out / "filter_gains.csv");
    trmjls::write_schedule_csv(g_os, sol.gains);
    std::cout << "wrote " << (out / "S.csv").string() << ", "
              << (out / "filter_gains.csv").string() << "\n";
  } else {
    write_text(out / "filter_solution.json",
               trmjls::filter_solution_to_json(sol).dump(2) + "\n");
    std::cout << "wrote " << (out / "filter_solution.json").string() << "\n";
  }
  double trace_final = 0.0;
  for (int i = 0; i < instance.filter->modes(); ++i) {
    trace_final += sol.S.back()[i].trace();
  }
  std::cout << "final error second moment trace = " << fmt6(trace_final)
            << "\n";
  return 0;
}

int cmd_duality(const InstanceDocument& instance) {
  const ControlPlant& plant = require_control(instance);
  const trmjls::DualityReport report = trmjls::check_duality(plant);
  if (!report.violations.empty()) {
    std::cerr << "assumption violations:\n";
    for (const auto& v : report.violations) std::cerr << "  " << v << "\n";
    return 1;
  }
  std::cout << "max |P_i(t) - S_i(l-t)|      = " << fmt6(report.max_P_dev)
            << "  (scale " << fmt6(report.P_scale) << ")\n";
  std::cout << "max |M_i(t) - Kf_i(l-t)'|    = " << fmt6(report.max_gain_dev)
            << "  (scale " << fmt6(report.gain_scale) << ")\n";
  std::cout << "duality "
            << (report.verified ? "verified" : "FAILED (threshold 1e-9)")
            << "\n";
  return report.verified ? 0 : 1;
}

int simulate_control(const ControlPlant& plant, const Options& opt,
                     const trmjls::SimConfig& cfg,
                     const std::filesystem::path& out) {
  const GainSchedule zero = GainSchedule::zero(plant);
  const trmjls::MomentTrajectory analytic = trmjls::open_loop_moments(plant);
  const double analytic_cost = trmjls::evaluate_cost(plant, zero);

  if (opt.oracle == "exact") {
    trmjls::ExactEnumeration exact;
    try {
      exact = trmjls::enumerate_exact(plant, nullptr);
    } catch (const std::invalid_argument& e) {
      std::cerr << e.what() << "\n";
      return 1;
    }
    double worst = 0.0;
    for (int t = 0; t <= plant.chain.horizon; ++t) {
      for (int i = 0; i < plant.modes(); ++i) {
        if (exact.mode_mass[static_cast<std::size_t>(t)][i] <= 0.0) continue;
        const double scale = 1.0 + exact.moments.at(t)[i].cwiseAbs().maxCoeff();
        worst = std::max(worst, (analytic.at(t)[i] - exact.moments.at(t)[i])
                                        .cwiseAbs()
                                        .maxCoeff() /
                                    scale);
      }
    }
    const double cost_dev = std::abs(analytic_cost - exact.cost) /
                            (1.0 + std::abs(exact.cost));
    std::cout << "exact oracle: worst moment deviation = " << fmt6(worst)
              << " (relative), cost deviation = " << fmt6(cost_dev)
              << " (relative)\n";
    const bool ok = worst <= 1e-11 && cost_dev <= 1e-10;
    std::cout << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? 0 : 1;
  }

  const trmjls::EmpiricalMoments emp = trmjls::simulate_phi(plant, &zero, cfg);
  double worst_sigma = 0.0;
  for (int t = 0; t <= plant.chain.horizon; ++t) {
    for (int i = 0; i < plant.modes(); ++i) {
      if (emp.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] <
          100) {
        continue;
      }
      const Eigen::MatrixXd dev =
          emp.mean[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] -
          analytic.at(t)[i];
      const Eigen::MatrixXd& se =
          emp.std_error[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
      for (Eigen::Index r = 0; r < dev.rows(); ++r) {
        for (Eigen::Index c = 0; c < dev.cols(); ++c) {
          if (se(r, c) > 0.0) {
            worst_sigma = std::max(worst_sigma,
                                   std::abs(dev(r, c)) / se(r, c));
          }
        }
      }
    }
  }
  const double cost_sigma =
      emp.cost_std_error > 0.0
          ? std::abs(emp.cost_mean - analytic_cost) / emp.cost_std_error
          : 0.0;
  std::cout << "monte carlo (" << cfg.samples << " paths, seed " << cfg.seed
            << "): worst sigma-normalized moment deviation = "
            << fmt6(worst_sigma)
            << ", cost deviation = " << fmt6(cost_sigma) << " sigma\n";
  if (opt.format == "csv") {
    std::ofstream os(out / "simulation.csv");
    trmjls::write_empirical_csv(os, emp);
    std::cout << "wrote " << (out / "simulation.csv").string() << "\n";
  } else {
    write_text(out / "simulation.json",
               trmjls::empirical_to_json(emp).dump(2) + "\n");
    std::cout << "wrote " << (out / "simulation.json").string() << "\n";
  }
  const bool ok = worst_sigma <= 3.0 && cost_sigma <= 3.0;
  std::cout << (ok ? "PASS (3 sigma)" : "FAIL (3 sigma)") << "\n";
  return ok ? 0 : 1;
}

int simulate_filter_instance(const FilterPlant& plant, const Options& opt,
                             const trmjls::SimConfig& cfg,
                             const std::filesystem::path& out) {
  if (opt.oracle == "exact") {
    std::cerr << "the exact oracle supports control instances only; use "
                 "--oracle montecarlo\n";
    return 1;
  }
  const trmjls::FilterSolution sol = trmjls::solve_lmmse(plant);
  const trmjls::EmpiricalMoments emp =
      trmjls::simulate_filter(plant, sol.gains, cfg);
  double worst_sigma = 0.0;
  for (int t = 0; t <= plant.chain.horizon; ++t) {
    for (int i = 0; i < plant.modes(); ++i) {
      if (emp.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] <
          100) {
        continue;
      }
      const Eigen::MatrixXd dev =
          emp.mean[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] -
          sol.S_at(t)[i];
      const Eigen::MatrixXd& se =
          emp.std_error[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
      for (Eigen::Index r = 0; r < dev.rows(); ++r) {
        for (Eigen::Index c = 0; c < dev.cols(); ++c) {
          if (se(r, c) > 0.0) {
            worst_sigma = std::max(worst_sigma,
                                   std::abs(dev(r, c)) / se(r, c));
          }
        }
      }
    }
  }
  std::cout << "monte carlo (" << cfg.samples << " paths, seed " << cfg.seed
            << "): worst sigma-normalized error-moment deviation = "
            << fmt6(worst_sigma) << "\n";
  if (opt.format == "csv") {
    std::ofstream os(out / "simulation.csv");
    trmjls::write_empirical_csv(os, emp);
    std::cout << "wrote " << (out / "simulation.csv").string() << "\n";
  } else {
    write_text(out / "simulation.json",
               trmjls::empirical_to_json(emp).dump(2) + "\n");
    std::cout << "wrote " << (out / "simulation.json").string() << "\n";
  }
  const bool ok = worst_sigma <= 3.0;
  std::cout << (ok ? "PASS (3 sigma)" : "FAIL (3 sigma)") << "\n";
  return ok ? 0 : 1;
}

int cmd_simulate(const InstanceDocument& instance, const Options& opt) {
  const trmjls::SimConfig cfg = resolve_sim_config(instance, opt);
  const std::filesystem::path out(opt.out_dir);
  std::filesystem::create_directories(out);
  if (instance.control) {
    return simulate_control(*instance.control, opt, cfg, out);
  }
  return simulate_filter_instance(*instance.filter, opt, cfg, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Analysis, optimal control, and filtering duality for linear systems "
      "driven by a time-reversed Markov chain"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* cmd, bool sim_flags) {
    cmd->add_option("instance", opt.instance_path,
                    "instance document (JSON, // comments allowed)")
        ->required();
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--format", opt.format, "output file format")
        ->check(CLI::IsMember({"csv", "json"}));
    if (sim_flags) {
      cmd->add_option("--samples", opt.samples, "Monte Carlo path count")
          ->check(CLI::PositiveNumber);
      cmd->add_option("--seed", opt.seed, "RNG seed");
      cmd->add_option("--oracle", opt.oracle, "oracle to run")
          ->check(CLI::IsMember({"exact", "montecarlo"}));
    }
  };

  CLI::App* stability = app.add_subcommand(
      "stability", "mean-square stability test (spectral radius)");
  add_common(stability, false);
  CLI::App* control = app.add_subcommand(
      "control", "backward Riccati synthesis and optimal cost");
  add_common(control, false);
  CLI::App* filter = app.add_subcommand(
      "filter", "forward error-moment recursion and filter gains");
  add_common(filter, false);
  CLI::App* duality = app.add_subcommand(
      "duality", "verify the control/filtering correspondence");
  add_common(duality, false);
  CLI::App* simulate = app.add_subcommand(
      "simulate", "check the analytic recursions against an oracle");
  add_common(simulate, true);

  CLI11_PARSE(app, argc, argv);
  opt.samples_set = simulate->count("--samples") > 0;
  opt.seed_set = simulate->count("--seed") > 0;

  try {
    const InstanceDocument instance = trmjls::read_instance(opt.instance_path);
    if (app.got_subcommand(stability)) return cmd_stability(instance);
    if (app.got_subcommand(control)) return cmd_control(instance, opt);
    if (app.got_subcommand(filter)) return cmd_filter(instance, opt);
    if (app.got_subcommand(duality)) return cmd_duality(instance);
    if (app.got_subcommand(simulate)) return cmd_simulate(instance, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
