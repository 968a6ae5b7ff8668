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
//
// Acceptance suite: one self-contained check per shipped guarantee, each
// printed as a single pass/fail line. Exits nonzero if any check fails.
//
#include <chrono>
#include <cstdio>
#include <string>

#include "test_support.hpp"

using namespace trmjls;
using testsupport::FilterOptions;
using testsupport::InstanceRng;
using testsupport::PlantOptions;

namespace {

int g_failures = 0;

struct Outcome {
  bool ok = false;
  std::string detail;
};

template <typename F>
void criterion(int index, const std::string& name, double time_budget_s,
               F&& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome.ok = false;
    outcome.detail = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  const bool in_budget = elapsed < time_budget_s;
  const bool pass = outcome.ok && in_budget;
  if (!pass) ++g_failures;
  std::printf("criterion %2d [%s] %s (%s; %.2f s%s)\n", index,
              pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str(),
              elapsed, in_budget ? "" : ", over budget");
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

MatrixFamily random_square_family(InstanceRng& rng, int modes,
                                  Eigen::Index n) {
  std::vector<Eigen::MatrixXd> mats;
  for (int i = 0; i < modes; ++i) mats.push_back(rng.matrix(n, n));
  return MatrixFamily(std::move(mats));
}

ControlPlant rescale_to_radius(const ControlPlant& plant, double target) {
  const auto report = is_ms_stable(plant.A, plant.chain);
  const double factor = std::sqrt(target / report.rho.value);
  ControlPlant out = plant;
  std::vector<Eigen::MatrixXd> a;
  for (int i = 0; i < plant.modes(); ++i) a.push_back(factor * plant.A[i]);
  out.A = MatrixFamily(std::move(a));
  out.Delta =
      Eigen::MatrixXd::Identity(plant.state_dim(), plant.state_dim());
  return out;
}

Outcome check_adjointness() {
  InstanceRng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int modes = rng.uniform_int(1, 4);
    const Eigen::Index n = rng.uniform_int(1, 3);
    const MarkovSpec chain = testsupport::random_chain(rng, modes, 1);
    const MatrixFamily z = random_square_family(rng, modes, n);
    const MatrixFamily x = random_square_family(rng, modes, n);
    const MatrixFamily y = random_square_family(rng, modes, n);
    const double lhs = inner_product(y, apply_U(z, x, chain));
    const double rhs = inner_product(apply_V(z, y, chain), x);
    worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
  }
  return {worst <= 1e-10, "max relative defect " + fmt(worst)};
}

Outcome check_moment_exactness() {
  InstanceRng rng(102);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    PlantOptions opt;
    opt.modes = rng.uniform_int(2, 3);
    opt.n = rng.uniform_int(1, 2);
    opt.m = 1;
    opt.horizon = rng.uniform_int(2, 5);
    opt.periodic = (trial % 5 == 4);
    const auto plant = testsupport::random_control_plant(rng, opt);
    const auto schedule = testsupport::random_gain_schedule(rng, plant);
    const auto traj = closed_loop_moments(plant, schedule);
    const auto exact = enumerate_exact(plant, &schedule);
    for (int t = 0; t <= opt.horizon; ++t) {
      for (int i = 0; i < opt.modes; ++i) {
        if (exact.mode_mass[static_cast<std::size_t>(t)][i] == 0.0) continue;
        const double scale =
            1.0 + exact.moments.at(t)[i].cwiseAbs().maxCoeff();
        worst = std::max(worst, (traj.at(t)[i] - exact.moments.at(t)[i])
                                        .cwiseAbs()
                                        .maxCoeff() /
                                    scale);
      }
    }
  }
  return {worst <= 1e-11, "max relative deviation " + fmt(worst)};
}

Outcome check_stability_decay() {
  InstanceRng rng(103);
  for (int trial = 0; trial < 10; ++trial) {
    PlantOptions opt;
    opt.modes = rng.uniform_int(2, 3);
    opt.n = 2;
    opt.horizon = 200;
    const auto base = testsupport::random_control_plant(rng, opt);

    const double stable_target = rng.uniform(0.5, 0.9);
    const auto stable = rescale_to_radius(base, stable_target);
    const auto rho_s = is_ms_stable(stable.A, stable.chain);
    if (!(rho_s.rho.value < 0.95) || !rho_s.stable) {
      return {false, "stable instance missed its radius target"};
    }
    const auto traj_s = open_loop_moments(stable);
    if (!(family_norm(traj_s.at(200)) < 1e-3 * family_norm(traj_s.at(0)))) {
      return {false, "stable instance failed to decay (rho " +
                         fmt(rho_s.rho.value) + ")"};
    }

    const double unstable_target = rng.uniform(1.1, 1.5);
    const auto unstable = rescale_to_radius(base, unstable_target);
    const auto rho_u = is_ms_stable(unstable.A, unstable.chain);
    if (!(rho_u.rho.value > 1.05) || rho_u.stable) {
      return {false, "unstable instance missed its radius target"};
    }
    const auto traj_u = open_loop_moments(unstable);
    if (!(family_norm(traj_u.at(200)) > 1e3 * family_norm(traj_u.at(0)))) {
      return {false, "unstable instance failed to grow (rho " +
                         fmt(rho_u.rho.value) + ")"};
    }
  }
  return {true, "10 decaying + 10 growing instances"};
}

Outcome check_value_identity() {
  InstanceRng rng(104);
  double worst = 0.0;
  double worst_exact = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    PlantOptions opt;
    opt.modes = rng.uniform_int(2, 3);
    opt.n = rng.uniform_int(1, 2);
    opt.m = 1;
    opt.horizon = rng.uniform_int(1, 5);
    opt.periodic = (trial % 4 == 3);
    const auto plant = testsupport::random_control_plant(rng, opt);
    const auto sol = solve_trmjlq(plant);
    const auto feedback = optimal_feedback(sol);
    worst = std::max(worst, testsupport::rel_dev(
                                evaluate_cost(plant, feedback),
                                sol.optimal_cost));
    const auto exact = enumerate_exact(plant, &feedback);
    worst_exact = std::max(
        worst_exact, testsupport::rel_dev(exact.cost, sol.optimal_cost));
  }
  const bool ok = worst <= 1e-10 && worst_exact <= 1e-10;
  return {ok, "recursion dev " + fmt(worst) + ", enumeration dev " +
                  fmt(worst_exact)};
}

Outcome check_optimality() {
  InstanceRng rng(105);
  double worst_margin = -1.0;
  for (int trial = 0; trial < 20; ++trial) {
    PlantOptions opt;
    opt.modes = rng.uniform_int(2, 3);
    opt.n = 2;
    opt.m = 1;
    opt.horizon = rng.uniform_int(2, 5);
    const auto plant = testsupport::random_control_plant(rng, opt);
    const auto sol = solve_trmjlq(plant);
    const auto check =
        verify_value_function(plant, sol, 7000 + static_cast<unsigned>(trial));
    worst_margin = std::max(worst_margin, check.worst_violation);
    if (!check.passed) {
      return {false, "a perturbation beat the optimum by " +
                         fmt(check.worst_margin)};
    }
  }

  // Perturbations confined to zero-probability modes must be cost-neutral.
  double worst_neutral = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    PlantOptions opt;
    opt.modes = 2;
    opt.horizon = 4;
    opt.periodic = true;
    const auto plant = testsupport::random_control_plant(rng, opt);
    const auto sol = solve_trmjlq(plant);
    const auto pi = theta_distribution(plant.chain);
    GainSchedule perturbed = optimal_feedback(sol);
    for (int t = 0; t < plant.chain.horizon; ++t) {
      std::vector<Eigen::MatrixXd> ks;
      for (int i = 0; i < plant.modes(); ++i) {
        Eigen::MatrixXd k = perturbed.at(t)[i];
        if (pi.at(t)[i] == 0.0) k += rng.matrix(k.rows(), k.cols(), 1.0);
        ks.push_back(std::move(k));
      }
      perturbed.gains[static_cast<std::size_t>(t)] =
          MatrixFamily(std::move(ks));
    }
    const double base = evaluate_cost(plant, optimal_feedback(sol));
    worst_neutral = std::max(
        worst_neutral, std::abs(evaluate_cost(plant, perturbed) - base));
  }
  const bool ok = worst_neutral < 1e-12;
  return {ok, "worst margin " + fmt(worst_margin) +
                  ", zero-mode cost shift " + fmt(worst_neutral)};
}

Outcome check_duality_suite() {
  InstanceRng rng(106);
  double worst_p = 0.0;
  double worst_gain = 0.0;
  int periodic_count = 0;
  for (int trial = 0; trial < 20; ++trial) {
    PlantOptions opt;
    opt.modes = rng.uniform_int(2, 3);
    opt.n = rng.uniform_int(1, 2);
    opt.m = 1;
    opt.s_state = 2;
    opt.horizon = rng.uniform_int(2, 6);
    opt.periodic = (trial % 5 == 0);  // trials 0,5,10,15
    opt.mode_dependent_E = (trial % 4 == 1);
    if (opt.periodic) ++periodic_count;
    const auto plant = testsupport::random_control_plant(rng, opt);
    const auto report = check_duality(plant);
    if (!report.violations.empty()) {
      return {false, "assumption violation on trial " + std::to_string(trial)};
    }
    worst_p = std::max(worst_p,
                       report.max_P_dev / (1.0 + report.P_scale));
    worst_gain = std::max(worst_gain,
                          report.max_gain_dev / (1.0 + report.gain_scale));
    if (!report.verified) {
      return {false, "duality failed on trial " + std::to_string(trial)};
    }
  }
  const bool ok = periodic_count >= 3;
  return {ok, "rel P dev " + fmt(worst_p) + ", rel gain dev " +
                  fmt(worst_gain) + ", " + std::to_string(periodic_count) +
                  " periodic"};
}

Outcome check_classical_reduction() {
  InstanceRng rng(107);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    PlantOptions opt;
    opt.modes = 1;
    opt.n = 2;
    opt.m = 1;
    opt.horizon = 6;
    const auto plant = testsupport::random_control_plant(rng, opt);
    const auto sol = solve_trmjlq(plant);
    const auto oracle = testsupport::lqr_backward(
        plant.A[0], plant.B[0], plant.C[0].transpose() * plant.C[0],
        plant.D[0].transpose() * plant.D[0],
        plant.E[0].transpose() * plant.E[0], opt.horizon);
    for (int t = 0; t <= opt.horizon; ++t) {
      const double scale =
          1.0 + oracle.P[static_cast<std::size_t>(t)].cwiseAbs().maxCoeff();
      worst = std::max(worst,
                       (sol.P_at(t)[0] - oracle.P[static_cast<std::size_t>(t)])
                               .cwiseAbs()
                               .maxCoeff() /
                           scale);
    }
    for (int t = 0; t < opt.horizon; ++t) {
      const double scale =
          1.0 + oracle.K[static_cast<std::size_t>(t)].cwiseAbs().maxCoeff();
      worst = std::max(
          worst, (sol.gains.at(t)[0] - oracle.K[static_cast<std::size_t>(t)])
                         .cwiseAbs()
                         .maxCoeff() /
                     scale);
    }
  }
  for (int trial = 0; trial < 10; ++trial) {
    FilterOptions opt;
    opt.modes = 1;
    opt.n = 2;
    opt.s = 1;
    opt.horizon = 6;
    const auto plant = testsupport::random_filter_plant(rng, opt);
    const auto sol = solve_lmmse(plant);
    const auto oracle = testsupport::kalman_forward(
        plant.F[0], plant.G[0], plant.L[0], plant.H[0], plant.Sigma,
        opt.horizon);
    for (int t = 0; t <= opt.horizon; ++t) {
      const double scale =
          1.0 + oracle.P[static_cast<std::size_t>(t)].cwiseAbs().maxCoeff();
      worst = std::max(worst,
                       (sol.S_at(t)[0] - oracle.P[static_cast<std::size_t>(t)])
                               .cwiseAbs()
                               .maxCoeff() /
                           scale);
      if (t >= 1) {
        const double kscale =
            1.0 + oracle.K[static_cast<std::size_t>(t)].cwiseAbs().maxCoeff();
        worst = std::max(
            worst, (sol.gain_at(t)[0] - oracle.K[static_cast<std::size_t>(t)])
                           .cwiseAbs()
                           .maxCoeff() /
                       kscale);
      }
    }
  }
  return {worst <= 1e-12, "max relative deviation " + fmt(worst)};
}

Outcome check_monte_carlo() {
  InstanceRng rng(108);
  SimConfig cfg;
  cfg.samples = 1000000;

  double worst_cost_sigma = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    PlantOptions opt;
    opt.modes = 2;
    opt.n = 2;
    opt.m = 1;
    opt.horizon = 3;
    const auto plant = testsupport::random_control_plant(rng, opt);
    const auto sol = solve_trmjlq(plant);
    const auto feedback = optimal_feedback(sol);
    const double analytic = evaluate_cost(plant, feedback);
    cfg.seed = 9000 + static_cast<std::uint64_t>(trial);
    cfg.estimator = SimConfig::Estimator::Cost;
    const auto emp = simulate_phi(plant, &feedback, cfg);
    const double sigma =
        std::abs(emp.cost_mean - analytic) / emp.cost_std_error;
    worst_cost_sigma = std::max(worst_cost_sigma, sigma);
    if (sigma > 3.0) {
      return {false, "cost off by " + fmt(sigma) + " sigma"};
    }
  }

  double worst_filter_sigma = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    FilterOptions opt;
    opt.modes = 2;
    opt.n = 2;
    opt.s = 1;
    opt.horizon = 3;
    const auto plant = testsupport::random_filter_plant(rng, opt);
    const auto sol = solve_lmmse(plant);
    cfg.seed = 9500 + static_cast<std::uint64_t>(trial);
    cfg.estimator = SimConfig::Estimator::FilterError;
    const auto emp = simulate_filter(plant, sol.gains, cfg);
    for (int t = 0; t <= opt.horizon; ++t) {
      for (int i = 0; i < opt.modes; ++i) {
        if (emp.counts[static_cast<std::size_t>(t)]
                      [static_cast<std::size_t>(i)] < 100) {
          continue;
        }
        const Eigen::MatrixXd dev =
            emp.mean[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] -
            sol.S_at(t)[i];
        const Eigen::MatrixXd& se =
            emp.std_error[static_cast<std::size_t>(t)]
                         [static_cast<std::size_t>(i)];
        for (Eigen::Index r = 0; r < dev.rows(); ++r) {
          for (Eigen::Index c = 0; c < dev.cols(); ++c) {
            if (se(r, c) > 0.0) {
              worst_filter_sigma = std::max(
                  worst_filter_sigma, std::abs(dev(r, c)) / se(r, c));
            }
          }
        }
      }
    }
  }
  const bool ok = worst_filter_sigma <= 3.0;
  return {ok, "worst cost dev " + fmt(worst_cost_sigma) +
                  " sigma, worst filter dev " + fmt(worst_filter_sigma) +
                  " sigma at 1e6 paths"};
}

Outcome check_reversibility() {
  // Reversible birth-death chain started at its stationary distribution.
  MarkovSpec chain;
  chain.transition.resize(3, 3);
  chain.transition << 0.5, 0.5, 0.0, 0.25, 0.5, 0.25, 0.0, 0.5, 0.5;
  chain.initial_eta.resize(3);
  chain.initial_eta << 0.25, 0.5, 0.25;
  chain.horizon = 8;
  const auto reversible = is_reversible(chain, 1e-10);
  if (!reversible.reversible) {
    return {false, "birth-death chain not classified reversible"};
  }
  double worst = 0.0;
  for (const auto& c : w_coefficients(chain)) {
    worst = std::max(
        worst, (c - chain.transition.transpose()).cwiseAbs().maxCoeff());
  }
  if (worst > 1e-12) {
    return {false, "stationary coefficients deviate by " + fmt(worst)};
  }

  // Non-reversible chain off stationarity: coefficients must move in time.
  MarkovSpec skewed;
  skewed.transition.resize(3, 3);
  skewed.transition << 0.8, 0.15, 0.05, 0.1, 0.7, 0.2, 0.3, 0.3, 0.4;
  skewed.initial_eta.resize(3);
  skewed.initial_eta << 1.0, 0.0, 0.0;
  skewed.horizon = 8;
  const auto coeffs = w_coefficients(skewed);
  double variation = 0.0;
  for (std::size_t t = 1; t < coeffs.size(); ++t) {
    variation = std::max(variation,
                         (coeffs[t] - coeffs[t - 1]).cwiseAbs().maxCoeff());
  }
  const bool ok = variation > 1e-3;
  return {ok, "stationary defect " + fmt(worst) + ", time variation " +
                  fmt(variation)};
}

Outcome check_y_recursion() {
  InstanceRng rng(110);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    FilterOptions opt;
    opt.modes = rng.uniform_int(2, 3);
    opt.n = rng.uniform_int(1, 2);
    opt.s = 1;
    opt.horizon = rng.uniform_int(2, 6);
    const auto plant = testsupport::random_filter_plant(rng, opt);
    const auto sol = solve_lmmse(plant);
    worst = std::max(worst, testsupport::y_recursion_deviation(plant, sol.S));
  }
  return {worst <= 1e-11, "max recursion defect " + fmt(worst)};
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion(1, "adjointness of the mixing operators", 1.0, check_adjointness);
  criterion(2, "moment recursion matches exact path enumeration", 10.0,
            check_moment_exactness);
  criterion(3, "spectral radius predicts moment decay/growth", 5.0,
            check_stability_decay);
  criterion(4, "optimal cost equals the replayed and enumerated cost", 10.0,
            check_value_identity);
  criterion(5, "perturbed schedules never beat the synthesis", 30.0,
            check_optimality);
  criterion(6, "control/filtering duality, including periodic chains", 10.0,
            check_duality_suite);
  criterion(7, "single-mode reduction to textbook recursions", 5.0,
            check_classical_reduction);
  criterion(8, "Monte Carlo concordance at 1e6 paths", 120.0,
            check_monte_carlo);
  criterion(9, "indicator-recursion coefficients and reversibility", 1.0,
            check_reversibility);
  criterion(10, "aggregated error moments solve the coupled recursion", 2.0,
            check_y_recursion);
  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
