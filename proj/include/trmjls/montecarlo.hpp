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
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "trmjls/markov.hpp"
#include "trmjls/matrix_family.hpp"
#include "trmjls/moments.hpp"
#include "trmjls/plant.hpp"
#include "trmjls/riccati.hpp"
#include "trmjls/rng.hpp"

namespace trmjls {

struct SimConfig {
  std::size_t samples = 1;
  std::uint64_t seed = 0;
  enum class Estimator { Moment, Cost, FilterError } estimator =
      Estimator::Moment;
};

struct SimMetadata {
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::string algorithm = kRngAlgorithm;
  int workers = 1;
  std::string estimator;
};

/// Conditioning counts below this are flagged low-confidence; their
/// standard-error estimates are unreliable and excluded from sigma-based
/// comparisons.
inline constexpr std::size_t kLowConfidenceCount = 30;

/// Per-(t, mode) sample second moments with entrywise standard errors.
/// Conditional normalization divides by the conditioning count (estimates
/// E{x x' | theta(t)=i}); indicator normalization divides by the total
/// sample count (estimates E{x x' . 1{eta(t)=i}}).
struct EmpiricalMoments {
  enum class Normalization { Conditional, Indicator };
  std::vector<std::vector<Eigen::MatrixXd>> mean;       // [t][i]
  std::vector<std::vector<Eigen::MatrixXd>> std_error;  // [t][i]
  std::vector<std::vector<std::size_t>> counts;         // [t][i]
  double cost_mean = 0.0;
  double cost_std_error = 0.0;
  Normalization normalization = Normalization::Conditional;
  SimMetadata meta;

  bool reliable(int t, int i) const {
    return counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] >=
           kLowConfidenceCount;
  }
};

/// Symmetric PSD square-root factor for sampling: eigenvalues clipped at 0,
/// so singular covariances are handled.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (m + m.transpose()));
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

/// One reversed-chain path: draw eta(0) from initial_eta, step forward
/// horizon times, return the sequence read backward.
inline std::vector<int> sample_theta_path(const MarkovSpec& chain, Rng& rng) {
  const int horizon = chain.horizon;
  std::vector<int> eta(static_cast<std::size_t>(horizon) + 1);
  eta[0] = rng.sample_index(chain.initial_eta);
  for (int t = 0; t < horizon; ++t) {
    eta[static_cast<std::size_t>(t) + 1] =
        rng.sample_index(chain.transition.row(eta[static_cast<std::size_t>(t)]));
  }
  std::vector<int> theta(eta.rbegin(), eta.rend());
  return theta;
}

namespace detail {

struct MomentAccumulator {
  std::vector<std::vector<Eigen::MatrixXd>> sum;
  std::vector<std::vector<Eigen::MatrixXd>> sum_sq;
  std::vector<std::vector<std::size_t>> counts;

  MomentAccumulator(int steps, int modes, Eigen::Index n) {
    sum.assign(static_cast<std::size_t>(steps) + 1,
               std::vector<Eigen::MatrixXd>(
                   static_cast<std::size_t>(modes),
                   Eigen::MatrixXd::Zero(n, n)));
    sum_sq = sum;
    counts.assign(static_cast<std::size_t>(steps) + 1,
                  std::vector<std::size_t>(static_cast<std::size_t>(modes), 0));
  }

  void add(int t, int i, const Eigen::MatrixXd& outer) {
    auto& s = sum[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
    auto& q = sum_sq[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
    s += outer;
    q += outer.cwiseProduct(outer);
    ++counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
  }

  /// Mean and standard error, dividing by the conditioning count
  /// (conditional) or by the total number of samples (indicator, where
  /// off-mode samples contribute exact zeros).
  void finalize(EmpiricalMoments& out, std::size_t samples,
                EmpiricalMoments::Normalization norm) const {
    const auto steps = sum.size();
    const auto modes = sum.front().size();
    out.mean.assign(steps, std::vector<Eigen::MatrixXd>());
    out.std_error.assign(steps, std::vector<Eigen::MatrixXd>());
    out.counts = counts;
    out.normalization = norm;
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t i = 0; i < modes; ++i) {
        const double denom =
            (norm == EmpiricalMoments::Normalization::Conditional)
                ? static_cast<double>(counts[t][i])
                : static_cast<double>(samples);
        if (denom == 0.0) {
          out.mean[t].push_back(Eigen::MatrixXd::Zero(sum[t][i].rows(),
                                                      sum[t][i].cols()));
          out.std_error[t].push_back(out.mean[t].back());
          continue;
        }
        Eigen::MatrixXd mean = sum[t][i] / denom;
        Eigen::MatrixXd var =
            (sum_sq[t][i] / denom - mean.cwiseProduct(mean))
                .cwiseMax(0.0);
        if (denom > 1.0) var *= denom / (denom - 1.0);
        out.mean[t].push_back(mean);
        out.std_error[t].push_back((var / denom).cwiseSqrt());
      }
    }
  }
};

}  // namespace detail

/// Sample-path estimator of the conditioned second moments and of the
/// quadratic cost. x0 is sampled Gaussian with covariance Delta (the
/// moments depend on the law only through its first two moments). Pass a
/// null schedule for the uncontrolled plant. Deterministic for a fixed
/// seed.
inline EmpiricalMoments simulate_phi(const ControlPlant& plant,
                                     const GainSchedule* K,
                                     const SimConfig& cfg) {
  if (K) detail::check_gain_schedule(plant, *K);
  if (cfg.samples < 1) throw std::invalid_argument("samples must be >= 1");
  const int N = plant.modes();
  const int horizon = plant.chain.horizon;
  const Eigen::Index n = plant.state_dim();

  // Closed-loop state and output maps per (t, mode).
  std::vector<std::vector<Eigen::MatrixXd>> a_cl(
      static_cast<std::size_t>(horizon));
  std::vector<std::vector<Eigen::MatrixXd>> c_cl(
      static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    for (int i = 0; i < N; ++i) {
      if (K) {
        const Eigen::MatrixXd& k = K->at(t)[i];
        a_cl[static_cast<std::size_t>(t)].push_back(plant.A[i] +
                                                    plant.B[i] * k);
        c_cl[static_cast<std::size_t>(t)].push_back(plant.C[i] +
                                                    plant.D[i] * k);
      } else {
        a_cl[static_cast<std::size_t>(t)].push_back(plant.A[i]);
        c_cl[static_cast<std::size_t>(t)].push_back(plant.C[i]);
      }
    }
  }
  const Eigen::MatrixXd delta_sqrt = psd_sqrt(plant.Delta);

  detail::MomentAccumulator acc(horizon, N, n);
  double cost_sum = 0.0;
  double cost_sum_sq = 0.0;
  Rng rng(cfg.seed);
  Eigen::VectorXd x(n), xi(n), x_next(n);

  for (std::size_t path = 0; path < cfg.samples; ++path) {
    const std::vector<int> theta = sample_theta_path(plant.chain, rng);
    for (Eigen::Index k = 0; k < n; ++k) xi[k] = rng.normal();
    x.noalias() = delta_sqrt * xi;
    double path_cost = 0.0;
    for (int t = 0; t <= horizon; ++t) {
      const int mode = theta[static_cast<std::size_t>(t)];
      acc.add(t, mode, x * x.transpose());
      if (t == horizon) {
        path_cost += (plant.E[mode] * x).squaredNorm();
      } else {
        path_cost +=
            (c_cl[static_cast<std::size_t>(t)][static_cast<std::size_t>(mode)] *
             x)
                .squaredNorm();
        x_next.noalias() =
            a_cl[static_cast<std::size_t>(t)][static_cast<std::size_t>(mode)] *
            x;
        x.swap(x_next);
      }
    }
    cost_sum += path_cost;
    cost_sum_sq += path_cost * path_cost;
  }

  EmpiricalMoments out;
  acc.finalize(out, cfg.samples,
               EmpiricalMoments::Normalization::Conditional);
  const double samples = static_cast<double>(cfg.samples);
  out.cost_mean = cost_sum / samples;
  double cost_var = cost_sum_sq / samples - out.cost_mean * out.cost_mean;
  if (cfg.samples > 1) cost_var *= samples / (samples - 1.0);
  out.cost_std_error = std::sqrt(std::max(0.0, cost_var) / samples);
  out.meta.seed = cfg.seed;
  out.meta.samples = cfg.samples;
  out.meta.estimator =
      (cfg.estimator == SimConfig::Estimator::Cost) ? "cost" : "moment";
  return out;
}

/// Sample-path estimator of the observer error moments
/// E{z~(t) z~(t)' . 1{eta(t)=i}} for a given filter gain schedule
/// (gains[t+1] consumes the measurement at time t, matching FilterSolution).
inline EmpiricalMoments simulate_filter(const FilterPlant& plant,
                                        const std::vector<MatrixFamily>& gains,
                                        const SimConfig& cfg) {
  if (cfg.samples < 1) throw std::invalid_argument("samples must be >= 1");
  const int horizon = plant.chain.horizon;
  if (static_cast<int>(gains.size()) != horizon + 1) {
    throw std::invalid_argument("gain schedule length != horizon + 1");
  }
  const int N = plant.modes();
  const Eigen::Index n = plant.state_dim();
  const Eigen::Index q = plant.noise_dim();
  const Eigen::MatrixXd sigma_sqrt = psd_sqrt(plant.Sigma);

  detail::MomentAccumulator acc(horizon, N, n);
  Rng rng(cfg.seed);
  Eigen::VectorXd z(n), zhat(n), xi(n), w(q), y(plant.output_dim());
  Eigen::VectorXd z_next(n), zhat_next(n);
  std::vector<int> eta(static_cast<std::size_t>(horizon) + 1);

  for (std::size_t path = 0; path < cfg.samples; ++path) {
    eta[0] = rng.sample_index(plant.chain.initial_eta);
    for (int t = 0; t < horizon; ++t) {
      eta[static_cast<std::size_t>(t) + 1] = rng.sample_index(
          plant.chain.transition.row(eta[static_cast<std::size_t>(t)]));
    }
    for (Eigen::Index k = 0; k < n; ++k) xi[k] = rng.normal();
    z.noalias() = sigma_sqrt * xi;
    zhat.setZero();
    {
      const Eigen::VectorXd err0 = zhat - z;
      acc.add(0, eta[0], err0 * err0.transpose());
    }
    for (int t = 0; t < horizon; ++t) {
      const int mode = eta[static_cast<std::size_t>(t) + 1];
      for (Eigen::Index k = 0; k < q; ++k) w[k] = rng.normal();
      y.noalias() = plant.L[mode] * z;
      y.noalias() += plant.H[mode] * w;
      z_next.noalias() = plant.F[mode] * z;
      z_next.noalias() += plant.G[mode] * w;
      zhat_next.noalias() = plant.F[mode] * zhat;
      zhat_next.noalias() +=
          gains[static_cast<std::size_t>(t) + 1][mode] *
          (y - plant.L[mode] * zhat);
      z.swap(z_next);
      zhat.swap(zhat_next);
      const Eigen::VectorXd err = zhat - z;
      acc.add(t + 1, mode, err * err.transpose());
    }
  }

  EmpiricalMoments out;
  acc.finalize(out, cfg.samples, EmpiricalMoments::Normalization::Indicator);
  out.meta.seed = cfg.seed;
  out.meta.samples = cfg.samples;
  out.meta.estimator = "filter-error";
  return out;
}

/// Exact moments and cost by total-probability summation over all
/// N^(horizon+1) chain paths.
struct ExactEnumeration {
  MomentTrajectory moments;               // conditioned, zero where no mass
  std::vector<Eigen::VectorXd> mode_mass; // path mass per (t, i)
  double cost = 0.0;
};

inline constexpr double kEnumerationPathLimit = 1e6;

/// Brute-force oracle: propagates Delta deterministically through every
/// mode path, weighting by path probability. Refuses instances with more
/// than kEnumerationPathLimit paths.
inline ExactEnumeration enumerate_exact(const ControlPlant& plant,
                                        const GainSchedule* K = nullptr) {
  if (K) detail::check_gain_schedule(plant, *K);
  const int N = plant.modes();
  const int horizon = plant.chain.horizon;
  const Eigen::Index n = plant.state_dim();
  const double path_count = std::pow(static_cast<double>(N), horizon + 1);
  if (path_count > kEnumerationPathLimit) {
    throw std::invalid_argument(
        "enumerate_exact: " + std::to_string(path_count) +
        " paths exceed the limit of " +
        std::to_string(static_cast<long long>(kEnumerationPathLimit)) +
        "; use the Monte Carlo estimator");
  }

  std::vector<std::vector<Eigen::MatrixXd>> a_cl(
      static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    for (int i = 0; i < N; ++i) {
      a_cl[static_cast<std::size_t>(t)].push_back(
          K ? Eigen::MatrixXd(plant.A[i] + plant.B[i] * K->at(t)[i])
            : plant.A[i]);
    }
  }
  // Stage weights Q(t) per mode; terminal E'E.
  std::vector<std::vector<Eigen::MatrixXd>> stage_q(
      static_cast<std::size_t>(horizon) + 1);
  for (int t = 0; t <= horizon; ++t) {
    for (int i = 0; i < N; ++i) {
      if (t == horizon) {
        stage_q[static_cast<std::size_t>(t)].push_back(
            plant.E[i].transpose() * plant.E[i]);
      } else if (K) {
        const Eigen::MatrixXd& k = K->at(t)[i];
        stage_q[static_cast<std::size_t>(t)].push_back(
            plant.C[i].transpose() * plant.C[i] +
            k.transpose() * (plant.D[i].transpose() * plant.D[i]) * k);
      } else {
        stage_q[static_cast<std::size_t>(t)].push_back(
            plant.C[i].transpose() * plant.C[i]);
      }
    }
  }

  std::vector<std::vector<Eigen::MatrixXd>> weighted_sum(
      static_cast<std::size_t>(horizon) + 1,
      std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(N),
                                   Eigen::MatrixXd::Zero(n, n)));
  std::vector<Eigen::VectorXd> mass(
      static_cast<std::size_t>(horizon) + 1, Eigen::VectorXd::Zero(N));
  double cost = 0.0;
  double cost_comp = 0.0;

  std::vector<int> eta(static_cast<std::size_t>(horizon) + 1, 0);
  std::vector<Eigen::MatrixXd> x_path(static_cast<std::size_t>(horizon) + 1);
  while (true) {
    double prob = plant.chain.initial_eta[eta[0]];
    for (int t = 0; t < horizon && prob != 0.0; ++t) {
      prob *= plant.chain.transition(eta[static_cast<std::size_t>(t)],
                                     eta[static_cast<std::size_t>(t) + 1]);
    }
    if (prob != 0.0) {
      x_path[0] = plant.Delta;
      for (int t = 0; t <= horizon; ++t) {
        const int mode = eta[static_cast<std::size_t>(horizon - t)];
        weighted_sum[static_cast<std::size_t>(t)]
                    [static_cast<std::size_t>(mode)] +=
            prob * x_path[static_cast<std::size_t>(t)];
        mass[static_cast<std::size_t>(t)][mode] += prob;
        const double term =
            prob *
            stage_q[static_cast<std::size_t>(t)][static_cast<std::size_t>(mode)]
                .cwiseProduct(x_path[static_cast<std::size_t>(t)])
                .sum();
        const double y = term - cost_comp;
        const double acc = cost + y;
        cost_comp = (acc - cost) - y;
        cost = acc;
        if (t < horizon) {
          const Eigen::MatrixXd& acl =
              a_cl[static_cast<std::size_t>(t)][static_cast<std::size_t>(mode)];
          x_path[static_cast<std::size_t>(t) + 1] =
              acl * x_path[static_cast<std::size_t>(t)] * acl.transpose();
        }
      }
    }
    // Next path in lexicographic order.
    int pos = horizon;
    while (pos >= 0 && eta[static_cast<std::size_t>(pos)] == N - 1) {
      eta[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++eta[static_cast<std::size_t>(pos)];
  }

  ExactEnumeration out;
  out.cost = cost;
  out.mode_mass = std::move(mass);
  out.moments.kind = MomentTrajectory::Kind::Conditioned;
  for (int t = 0; t <= horizon; ++t) {
    std::vector<Eigen::MatrixXd> fam;
    fam.reserve(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      const double p = out.mode_mass[static_cast<std::size_t>(t)][i];
      fam.push_back(p > 0.0
                        ? Eigen::MatrixXd(
                              weighted_sum[static_cast<std::size_t>(t)]
                                          [static_cast<std::size_t>(i)] /
                              p)
                        : Eigen::MatrixXd::Zero(n, n));
    }
    out.moments.values.push_back(MatrixFamily(std::move(fam)));
  }
  return out;
}

}  // namespace trmjls
