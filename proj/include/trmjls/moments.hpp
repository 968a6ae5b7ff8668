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
#include <stdexcept>
#include <vector>

#include "trmjls/markov.hpp"
#include "trmjls/matrix_family.hpp"
#include "trmjls/operators.hpp"
#include "trmjls/plant.hpp"

namespace trmjls {

/// Time-indexed second-moment matrices, one family per step 0..horizon.
/// Conditioned entries are E{x x' | theta(t)=i}; unconditioned entries are
/// E{x x' . 1{theta(t)=i}} (the indicator-restricted moment).
struct MomentTrajectory {
  enum class Kind { Conditioned, Unconditioned };
  std::vector<MatrixFamily> values;
  Kind kind = Kind::Conditioned;

  const MatrixFamily& at(int t) const {
    return values[static_cast<std::size_t>(t)];
  }
  int steps() const { return static_cast<int>(values.size()) - 1; }
};

/// Feedback schedule K(t), t = 0..horizon-1, applied as x+ = (A + B K) x.
struct GainSchedule {
  std::vector<MatrixFamily> gains;

  const MatrixFamily& at(int t) const {
    return gains[static_cast<std::size_t>(t)];
  }
  int steps() const { return static_cast<int>(gains.size()); }

  static GainSchedule zero(const ControlPlant& plant) {
    GainSchedule schedule;
    schedule.gains.assign(
        static_cast<std::size_t>(plant.chain.horizon),
        MatrixFamily::zero(plant.modes(), plant.input_dim(),
                           plant.state_dim()));
    return schedule;
  }
};

inline GainSchedule negate(const GainSchedule& schedule) {
  GainSchedule out;
  out.gains.reserve(schedule.gains.size());
  for (const auto& k : schedule.gains) out.gains.push_back(-1.0 * k);
  return out;
}

namespace detail {
inline void check_gain_schedule(const ControlPlant& plant,
                                const GainSchedule& K) {
  if (K.steps() != plant.chain.horizon) {
    throw std::invalid_argument("gain schedule length != horizon");
  }
  for (const auto& k : K.gains) {
    if (k.size() != plant.modes() || k.rows() != plant.input_dim() ||
        k.cols() != plant.state_dim()) {
      throw std::invalid_argument("gain dimensions incompatible with B");
    }
  }
}

inline MatrixFamily closed_loop_A(const ControlPlant& plant,
                                  const MatrixFamily& K) {
  std::vector<Eigen::MatrixXd> acl;
  acl.reserve(static_cast<std::size_t>(plant.modes()));
  for (int i = 0; i < plant.modes(); ++i) {
    acl.push_back(plant.A[i] + plant.B[i] * K[i]);
  }
  return MatrixFamily(std::move(acl));
}
}  // namespace detail

/// Conditioned second moments of the uncontrolled plant:
/// X(0) = (Delta,...,Delta), X(t+1) = apply_U(A, X(t)).
inline MomentTrajectory open_loop_moments(const ControlPlant& plant) {
  MomentTrajectory traj;
  traj.kind = MomentTrajectory::Kind::Conditioned;
  traj.values.reserve(static_cast<std::size_t>(plant.chain.horizon) + 1);
  traj.values.push_back(MatrixFamily::replicate(plant.modes(), plant.Delta));
  for (int t = 0; t < plant.chain.horizon; ++t) {
    traj.values.push_back(
        symmetrize_each(apply_U(plant.A, traj.values.back(), plant.chain)));
  }
  return traj;
}

/// Same recursion with A replaced by A + B K(t) at each step.
inline MomentTrajectory closed_loop_moments(const ControlPlant& plant,
                                            const GainSchedule& K) {
  detail::check_gain_schedule(plant, K);
  MomentTrajectory traj;
  traj.kind = MomentTrajectory::Kind::Conditioned;
  traj.values.reserve(static_cast<std::size_t>(plant.chain.horizon) + 1);
  traj.values.push_back(MatrixFamily::replicate(plant.modes(), plant.Delta));
  for (int t = 0; t < plant.chain.horizon; ++t) {
    const MatrixFamily acl = detail::closed_loop_A(plant, K.at(t));
    traj.values.push_back(
        symmetrize_each(apply_U(acl, traj.values.back(), plant.chain)));
  }
  return traj;
}

/// Transition weights of the indicator-moment recursion,
/// c_ij(t) = p_ij * pi_i(t+1) / pi_j(t), with 0/0 summands dropped (their
/// W contribution is zero by construction). One N x N matrix per step.
inline std::vector<Eigen::MatrixXd> w_coefficients(const MarkovSpec& chain) {
  const DistributionTable pi = theta_distribution(chain);
  const int N = chain.modes();
  std::vector<Eigen::MatrixXd> coeffs;
  coeffs.reserve(static_cast<std::size_t>(chain.horizon));
  for (int t = 0; t < chain.horizon; ++t) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
      if (pi.at(t + 1)[i] == 0.0) continue;
      for (int j = 0; j < N; ++j) {
        if (pi.at(t)[j] == 0.0) continue;
        c(i, j) = chain.transition(i, j) * pi.at(t + 1)[i] / pi.at(t)[j];
      }
    }
    coeffs.push_back(std::move(c));
  }
  return coeffs;
}

/// Indicator-restricted second moments W_i(t) = pi_i(t) X_i(t):
/// W_i(0) = pi_i(0) Delta, W_i(t+1) = sum_j c_ij(t) A_j W_j(t) A_j'.
/// Pass a null schedule pointer for the uncontrolled plant.
inline MomentTrajectory w_moments(const ControlPlant& plant,
                                  const GainSchedule* K = nullptr) {
  if (K) detail::check_gain_schedule(plant, *K);
  const DistributionTable pi = theta_distribution(plant.chain);
  const auto coeffs = w_coefficients(plant.chain);
  const int N = plant.modes();

  MomentTrajectory traj;
  traj.kind = MomentTrajectory::Kind::Unconditioned;
  traj.values.reserve(static_cast<std::size_t>(plant.chain.horizon) + 1);
  traj.values.push_back(
      scale_by_modes(pi.at(0), MatrixFamily::replicate(N, plant.Delta)));
  for (int t = 0; t < plant.chain.horizon; ++t) {
    const MatrixFamily acl =
        K ? detail::closed_loop_A(plant, K->at(t)) : plant.A;
    const MatrixFamily& w = traj.values.back();
    std::vector<Eigen::MatrixXd> next;
    next.reserve(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      Eigen::MatrixXd acc =
          Eigen::MatrixXd::Zero(plant.state_dim(), plant.state_dim());
      if (pi.at(t + 1)[i] != 0.0) {
        for (int j = 0; j < N; ++j) {
          const double c = coeffs[static_cast<std::size_t>(t)](i, j);
          if (c != 0.0) acc.noalias() += c * (acl[j] * w[j] * acl[j].transpose());
        }
      }
      next.push_back(0.5 * (acc + acc.transpose()));
    }
    traj.values.push_back(MatrixFamily(std::move(next)));
  }
  return traj;
}

/// Quadratic stage/terminal cost of the closed loop,
/// sum_t < pi(t) Q(t), X(t) > with Q(t) = C'C + K'D'DK and Q(horizon) = E'E.
/// Accumulated in ascending t with compensated summation.
inline double evaluate_cost(const ControlPlant& plant, const GainSchedule& K) {
  detail::check_gain_schedule(plant, K);
  const DistributionTable pi = theta_distribution(plant.chain);
  const MomentTrajectory traj = closed_loop_moments(plant, K);
  const int N = plant.modes();

  double total = 0.0;
  double comp = 0.0;
  auto add = [&](double term) {
    const double y = term - comp;
    const double t = total + y;
    comp = (t - total) - y;
    total = t;
  };

  for (int t = 0; t <= plant.chain.horizon; ++t) {
    for (int i = 0; i < N; ++i) {
      const double weight = pi.at(t)[i];
      if (weight == 0.0) continue;
      Eigen::MatrixXd q;
      if (t == plant.chain.horizon) {
        q = plant.E[i].transpose() * plant.E[i];
      } else {
        const Eigen::MatrixXd& k = K.at(t)[i];
        q = plant.C[i].transpose() * plant.C[i] +
            k.transpose() * (plant.D[i].transpose() * plant.D[i]) * k;
      }
      add(weight * q.cwiseProduct(traj.at(t)[i]).sum());
    }
  }
  return total;
}

}  // namespace trmjls
