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
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "trmjls/markov.hpp"
#include "trmjls/matrix_family.hpp"
#include "trmjls/moments.hpp"
#include "trmjls/operators.hpp"
#include "trmjls/plant.hpp"
#include "trmjls/rng.hpp"

namespace trmjls {

namespace detail {

/// Solve M X = rhs for symmetric positive definite M, rejecting matrices
/// whose condition estimate exceeds 1e12.
inline Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& M,
                                 const Eigen::MatrixXd& rhs, const char* what,
                                 int t, int i) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi / lo > 1e12) {
    throw std::runtime_error(std::string(what) +
                             " numerically singular at t=" + std::to_string(t) +
                             ", mode " + std::to_string(i));
  }
  return M.ldlt().solve(rhs);
}

}  // namespace detail

/// Backward synthesis result: cost-to-go matrices P(t), the Riccati gain
/// schedule M(t) (the optimal feedback law is u(t) = -M_{theta(t)}(t) x(t)),
/// and the optimal cost <P(0), (Delta,...,Delta)>.
struct ControlSolution {
  std::vector<MatrixFamily> P;  // horizon+1 families, P[t]
  GainSchedule gains;           // M(t), t = 0..horizon-1
  double optimal_cost = 0.0;

  const MatrixFamily& P_at(int t) const {
    return P[static_cast<std::size_t>(t)];
  }
};

/// The feedback schedule attaining the optimum under the x+ = (A + B K) x
/// convention of closed_loop_moments / evaluate_cost, i.e. K(t) = -M(t).
inline GainSchedule optimal_feedback(const ControlSolution& sol) {
  return negate(sol.gains);
}

/// Coupled Riccati backward recursion. Modes with zero occupation
/// probability at time t get P_i(t) = 0 and M_i(t) = 0 exactly.
inline ControlSolution solve_trmjlq(const ControlPlant& plant) {
  const int N = plant.modes();
  const int horizon = plant.chain.horizon;
  const Eigen::Index n = plant.state_dim();
  const Eigen::Index m = plant.input_dim();
  const DistributionTable pi = theta_distribution(plant.chain);

  std::vector<Eigen::MatrixXd> terminal;
  terminal.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    terminal.push_back(pi.at(horizon)[i] *
                       (plant.E[i].transpose() * plant.E[i]));
  }

  ControlSolution sol;
  sol.P.assign(static_cast<std::size_t>(horizon) + 1,
               MatrixFamily::zero(N, n, n));
  sol.P[static_cast<std::size_t>(horizon)] =
      symmetrize_each(MatrixFamily(std::move(terminal)));
  sol.gains.gains.assign(static_cast<std::size_t>(horizon),
                         MatrixFamily::zero(N, m, n));

  for (int t = horizon - 1; t >= 0; --t) {
    const MatrixFamily mixed =
        apply_D(sol.P[static_cast<std::size_t>(t) + 1], plant.chain);
    std::vector<Eigen::MatrixXd> p_now(static_cast<std::size_t>(N));
    std::vector<Eigen::MatrixXd> m_now(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      const double prob = pi.at(t)[i];
      if (prob == 0.0) {
        p_now[static_cast<std::size_t>(i)] = Eigen::MatrixXd::Zero(n, n);
        m_now[static_cast<std::size_t>(i)] = Eigen::MatrixXd::Zero(m, n);
        continue;
      }
      const Eigen::MatrixXd bt_mixed = plant.B[i].transpose() * mixed[i];
      Eigen::MatrixXd r = bt_mixed * plant.B[i] +
                          prob * (plant.D[i].transpose() * plant.D[i]);
      r = 0.5 * (r + r.transpose());
      const Eigen::MatrixXd cross = bt_mixed * plant.A[i];  // B' D(P+) A
      const Eigen::MatrixXd gain = detail::spd_solve(r, cross, "R", t, i);
      Eigen::MatrixXd p = prob * (plant.C[i].transpose() * plant.C[i]) +
                          plant.A[i].transpose() * mixed[i] * plant.A[i] -
                          cross.transpose() * gain;
      m_now[static_cast<std::size_t>(i)] = gain;
      p_now[static_cast<std::size_t>(i)] = 0.5 * (p + p.transpose());
    }
    sol.P[static_cast<std::size_t>(t)] = MatrixFamily(std::move(p_now));
    sol.gains.gains[static_cast<std::size_t>(t)] =
        MatrixFamily(std::move(m_now));
  }

  sol.optimal_cost = inner_product(
      sol.P[0], MatrixFamily::replicate(N, plant.Delta));
  return sol;
}

/// Result of checking the cost-to-go identity and one-shot optimality.
/// Violations are normalized by (1 + |optimal cost|); worst_violation <= 0
/// means every check passed at the 1e-10 threshold.
struct ValueFunctionCheck {
  double identity_deviation = 0.0;  // |<P(0),Delta> - J(-M)| / (1+|J*|)
  double worst_margin = 0.0;        // max over perturbations of (J* - J)/(1+|J*|)
  double worst_violation = 0.0;
  bool passed = false;
};

/// Re-derives the optimal cost through the moment recursion and verifies
/// that Gaussian perturbations of the feedback schedule (confined to
/// positive-probability modes) never do better.
inline ValueFunctionCheck verify_value_function(const ControlPlant& plant,
                                                const ControlSolution& sol,
                                                std::uint64_t seed = 20260809) {
  constexpr double kTol = 1e-10;
  const DistributionTable pi = theta_distribution(plant.chain);
  const GainSchedule best = optimal_feedback(sol);
  const double j_opt = sol.optimal_cost;
  const double scale = 1.0 + std::abs(j_opt);

  ValueFunctionCheck check;
  check.identity_deviation =
      std::abs(j_opt - evaluate_cost(plant, best)) / scale;

  Rng rng(seed);
  check.worst_margin = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < 20; ++p) {
    const double noise_scale = (p < 10) ? 0.1 : 1.0;
    GainSchedule perturbed = best;
    for (int t = 0; t < plant.chain.horizon; ++t) {
      std::vector<Eigen::MatrixXd> ks;
      ks.reserve(static_cast<std::size_t>(plant.modes()));
      for (int i = 0; i < plant.modes(); ++i) {
        Eigen::MatrixXd k = perturbed.at(t)[i];
        if (pi.at(t)[i] > 0.0) {
          for (Eigen::Index r = 0; r < k.rows(); ++r) {
            for (Eigen::Index c = 0; c < k.cols(); ++c) {
              k(r, c) += noise_scale * rng.normal();
            }
          }
        }
        ks.push_back(std::move(k));
      }
      perturbed.gains[static_cast<std::size_t>(t)] =
          MatrixFamily(std::move(ks));
    }
    const double j = evaluate_cost(plant, perturbed);
    check.worst_margin = std::max(check.worst_margin, (j_opt - j) / scale);
  }
  if (plant.chain.horizon == 0) check.worst_margin = 0.0;

  check.worst_violation =
      std::max(check.identity_deviation - kTol, check.worst_margin - kTol);
  check.passed = check.worst_violation <= 0.0;
  return check;
}

/// Forward filtering result: error second moments S(t) and gain schedule.
/// gains[t] is the gain that consumes the measurement at time t-1 to
/// produce the estimate at time t; gains[0] is zero (the initial estimate
/// is fixed at 0). S_i(t) = 0 and gains[t]_i = 0 whenever the chain cannot
/// occupy mode i at time t.
struct FilterSolution {
  std::vector<MatrixFamily> S;      // horizon+1 families
  std::vector<MatrixFamily> gains;  // horizon+1 families, n x s

  const MatrixFamily& S_at(int t) const {
    return S[static_cast<std::size_t>(t)];
  }
  const MatrixFamily& gain_at(int t) const {
    return gains[static_cast<std::size_t>(t)];
  }
};

/// Forward coupled Riccati recursion for the minimum-mean-square-error
/// observer of the jump system. An optional per-mode override replaces the
/// shared Sigma in the initial condition S_i(0) = upsilon_i(0) Sigma_i
/// (used by the duality checker when the terminal weight is mode-dependent).
inline FilterSolution solve_lmmse(
    const FilterPlant& plant,
    const std::vector<Eigen::MatrixXd>* sigma_override = nullptr) {
  const int N = plant.modes();
  const int horizon = plant.chain.horizon;
  const Eigen::Index n = plant.state_dim();
  const Eigen::Index s = plant.output_dim();
  const DistributionTable upsilon = propagate_eta(plant.chain);
  if (sigma_override && static_cast<int>(sigma_override->size()) != N) {
    throw std::invalid_argument("sigma override: one matrix per mode required");
  }

  FilterSolution sol;
  sol.S.reserve(static_cast<std::size_t>(horizon) + 1);
  sol.gains.assign(static_cast<std::size_t>(horizon) + 1,
                   MatrixFamily::zero(N, n, s));

  std::vector<Eigen::MatrixXd> initial;
  initial.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    const Eigen::MatrixXd& sigma =
        sigma_override ? (*sigma_override)[static_cast<std::size_t>(i)]
                       : plant.Sigma;
    initial.push_back(upsilon.at(0)[i] * sigma);
  }
  sol.S.push_back(symmetrize_each(MatrixFamily(std::move(initial))));

  for (int t = 0; t < horizon; ++t) {
    const MatrixFamily mixed = apply_D(sol.S.back(), plant.chain);
    std::vector<Eigen::MatrixXd> s_next(static_cast<std::size_t>(N));
    std::vector<Eigen::MatrixXd> k_next(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      const double prob = upsilon.at(t + 1)[i];
      if (prob == 0.0) {
        s_next[static_cast<std::size_t>(i)] = Eigen::MatrixXd::Zero(n, n);
        k_next[static_cast<std::size_t>(i)] = Eigen::MatrixXd::Zero(n, s);
        continue;
      }
      const Eigen::MatrixXd mixed_lt = mixed[i] * plant.L[i].transpose();
      Eigen::MatrixXd innovation =
          plant.L[i] * mixed_lt +
          prob * (plant.H[i] * plant.H[i].transpose());
      innovation = 0.5 * (innovation + innovation.transpose());
      const Eigen::MatrixXd gain_t =
          detail::spd_solve(innovation, (plant.F[i] * mixed_lt).transpose(),
                            "innovation covariance", t, i);
      const Eigen::MatrixXd gain = gain_t.transpose();  // F D(S) L' inv(...)
      Eigen::MatrixXd s_mat =
          prob * (plant.G[i] * plant.G[i].transpose()) +
          plant.F[i] * mixed[i] * plant.F[i].transpose() -
          gain * (plant.F[i] * mixed_lt).transpose();
      s_next[static_cast<std::size_t>(i)] = 0.5 * (s_mat + s_mat.transpose());
      k_next[static_cast<std::size_t>(i)] = gain;
    }
    sol.S.push_back(MatrixFamily(std::move(s_next)));
    sol.gains[static_cast<std::size_t>(t) + 1] =
        MatrixFamily(std::move(k_next));
  }
  return sol;
}

/// Transposed-data filtering problem associated with a control plant:
/// F = A', G = C', L = B', H = D', Sigma = E'E, same chain. The noise
/// orthogonality G H' = C'D = 0 is inherited from the control assumptions.
/// When E is mode-dependent the shared Sigma cannot represent the terminal
/// weight; initial_overrides carries E_i'E_i per mode for the solver.
struct DualFilterProblem {
  FilterPlant plant;
  bool mode_dependent_terminal = false;
  std::vector<Eigen::MatrixXd> initial_overrides;  // E_i' E_i
};

inline DualFilterProblem dualize(const ControlPlant& plant) {
  DualFilterProblem dual;
  dual.plant.F = transpose_each(plant.A);
  dual.plant.G = transpose_each(plant.C);
  dual.plant.L = transpose_each(plant.B);
  dual.plant.H = transpose_each(plant.D);
  dual.plant.chain = plant.chain;
  dual.initial_overrides.reserve(static_cast<std::size_t>(plant.modes()));
  for (int i = 0; i < plant.modes(); ++i) {
    Eigen::MatrixXd w = plant.E[i].transpose() * plant.E[i];
    dual.initial_overrides.push_back(0.5 * (w + w.transpose()));
  }
  dual.plant.Sigma = dual.initial_overrides.front();
  for (int i = 1; i < plant.modes(); ++i) {
    const double dev =
        (dual.initial_overrides[static_cast<std::size_t>(i)] -
         dual.plant.Sigma)
            .cwiseAbs()
            .maxCoeff();
    if (dev > 1e-12 * (1.0 + dual.plant.Sigma.cwiseAbs().maxCoeff())) {
      dual.mode_dependent_terminal = true;
    }
  }
  return dual;
}

struct DualityReport {
  double max_P_dev = 0.0;     // max_{t,i} ||P_i(t) - S_i(horizon-t)||_F
  double max_gain_dev = 0.0;  // max_{t,i} ||M_i(t) - K_i(horizon-t)'||_F
  double P_scale = 0.0;
  double gain_scale = 0.0;
  bool verified = false;
  std::vector<std::string> violations;
};

/// Solves the control problem and its transposed filtering problem and
/// compares the two Riccati solutions, time-reversed: P_i(t) against
/// S_i(horizon-t) for t = 0..horizon, and M_i(t) against the transposed
/// filter gain at horizon-t for t = 0..horizon-1. Threshold 1e-9 relative.
inline DualityReport check_duality(const ControlPlant& plant) {
  DualityReport report;
  report.violations = validate_plant(plant);
  const DualFilterProblem dual = dualize(plant);
  {
    auto dual_violations = validate_plant(dual.plant);
    report.violations.insert(report.violations.end(), dual_violations.begin(),
                             dual_violations.end());
  }
  if (!report.violations.empty()) return report;

  const int horizon = plant.chain.horizon;
  const ControlSolution control = solve_trmjlq(plant);
  const FilterSolution filter =
      solve_lmmse(dual.plant, &dual.initial_overrides);

  for (int t = 0; t <= horizon; ++t) {
    const MatrixFamily& p = control.P_at(t);
    const MatrixFamily& s = filter.S_at(horizon - t);
    for (int i = 0; i < plant.modes(); ++i) {
      report.max_P_dev = std::max(report.max_P_dev, (p[i] - s[i]).norm());
      report.P_scale = std::max(report.P_scale, p[i].norm());
    }
  }
  for (int t = 0; t < horizon; ++t) {
    const MatrixFamily& m = control.gains.at(t);
    const MatrixFamily& k = filter.gain_at(horizon - t);
    for (int i = 0; i < plant.modes(); ++i) {
      report.max_gain_dev = std::max(
          report.max_gain_dev,
          (m[i] - k[i].transpose()).norm());
      report.gain_scale = std::max(report.gain_scale, m[i].norm());
    }
  }
  report.verified =
      report.max_P_dev <= 1e-9 * (1.0 + report.P_scale) &&
      report.max_gain_dev <= 1e-9 * (1.0 + report.gain_scale);
  return report;
}

}  // namespace trmjls
