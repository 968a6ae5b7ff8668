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
#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trmjls {

/// Tolerance for accepting row-stochastic / probability-vector inputs.
/// Inputs off by more are rejected; inputs within are renormalized so each
/// row sums to exactly 1.
inline constexpr double kStochasticTol = 1e-12;

/// Probabilities below this threshold are snapped to exact zero, so that
/// zero-probability-mode branches trigger deterministically.
inline constexpr double kProbSnapTol = 1e-14;

/// A finite Markov chain over modes {0,...,N-1}: row-stochastic transition
/// matrix, distribution of the forward chain at time 0, and the horizon
/// (number of steps) over which the reversed chain is read.
struct MarkovSpec {
  Eigen::MatrixXd transition;   // N x N, row i -> next-mode distribution
  Eigen::VectorXd initial_eta;  // length N
  int horizon = 0;              // number of steps, >= 0

  int modes() const { return static_cast<int>(initial_eta.size()); }
};

inline std::vector<std::string> validate_chain(const MarkovSpec& chain) {
  std::vector<std::string> violations;
  const auto n = chain.initial_eta.size();
  if (n < 1) violations.push_back("chain: mode count must be >= 1");
  if (chain.transition.rows() != n || chain.transition.cols() != n) {
    violations.push_back("chain: transition matrix must be N x N");
    return violations;
  }
  if (chain.horizon < 0) violations.push_back("chain: horizon must be >= 0");
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double p = chain.transition(i, j);
      if (p < -kStochasticTol || p > 1.0 + kStochasticTol) {
        violations.push_back("chain: transition(" + std::to_string(i) + "," +
                             std::to_string(j) + ") outside [0,1]");
      }
      row_sum += p;
    }
    if (std::abs(row_sum - 1.0) > kStochasticTol) {
      violations.push_back("chain: transition row " + std::to_string(i) +
                           " sums to " + std::to_string(row_sum) +
                           ", not 1");
    }
  }
  double eta_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = chain.initial_eta[i];
    if (p < -kStochasticTol || p > 1.0 + kStochasticTol) {
      violations.push_back("chain: initial_eta(" + std::to_string(i) +
                           ") outside [0,1]");
    }
    eta_sum += p;
  }
  if (std::abs(eta_sum - 1.0) > kStochasticTol) {
    violations.push_back("chain: initial_eta sums to " +
                         std::to_string(eta_sum) + ", not 1");
  }
  return violations;
}

namespace detail {
inline Eigen::VectorXd snap_probabilities(Eigen::VectorXd v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) < kProbSnapTol) v[i] = 0.0;
  }
  return v;
}
}  // namespace detail

/// Returns a cleaned copy: rows rescaled to sum exactly to 1, tiny entries
/// clamped to 0. Throws if the input violates the stochasticity invariants
/// beyond kStochasticTol.
inline MarkovSpec normalize_chain(const MarkovSpec& chain) {
  auto violations = validate_chain(chain);
  if (!violations.empty()) {
    std::string msg = "invalid MarkovSpec:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw std::invalid_argument(msg);
  }
  MarkovSpec out = chain;
  const auto n = out.initial_eta.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out.transition(i, j) = std::clamp(out.transition(i, j), 0.0, 1.0);
      if (out.transition(i, j) < kProbSnapTol) out.transition(i, j) = 0.0;
    }
    out.transition.row(i) /= out.transition.row(i).sum();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    out.initial_eta[i] = std::clamp(out.initial_eta[i], 0.0, 1.0);
    if (out.initial_eta[i] < kProbSnapTol) out.initial_eta[i] = 0.0;
  }
  out.initial_eta /= out.initial_eta.sum();
  return out;
}

/// Mode-occupation probabilities, one row per time step 0..horizon.
struct DistributionTable {
  enum class Orientation { ForwardEta, ReversedTheta };
  std::vector<Eigen::VectorXd> rows;
  Orientation orientation = Orientation::ForwardEta;

  const Eigen::VectorXd& at(int t) const {
    return rows[static_cast<std::size_t>(t)];
  }
  int steps() const { return static_cast<int>(rows.size()) - 1; }
};

/// Distribution of the forward chain: row t = initial_eta' * P^t.
inline DistributionTable propagate_eta(const MarkovSpec& chain) {
  DistributionTable table;
  table.orientation = DistributionTable::Orientation::ForwardEta;
  table.rows.reserve(static_cast<std::size_t>(chain.horizon) + 1);
  Eigen::VectorXd v = detail::snap_probabilities(chain.initial_eta);
  table.rows.push_back(v);
  for (int t = 0; t < chain.horizon; ++t) {
    v = detail::snap_probabilities(chain.transition.transpose() * v);
    table.rows.push_back(v);
  }
  return table;
}

/// Distribution of the reversed chain: row t equals the forward row at
/// horizon - t (same floating-point values).
inline DistributionTable theta_distribution(const MarkovSpec& chain) {
  DistributionTable table = propagate_eta(chain);
  std::reverse(table.rows.begin(), table.rows.end());
  table.orientation = DistributionTable::Orientation::ReversedTheta;
  return table;
}

struct ReversibilityResult {
  bool reversible = false;
  /// Set when the eigenvalue-1 eigenspace of the transition matrix has
  /// dimension > 1 (reducible chain); the detailed-balance test is then
  /// not decided against a unique stationary vector.
  bool indeterminate = false;
  std::optional<Eigen::VectorXd> stationary;
};

/// Detailed-balance test against the stationary distribution, found via the
/// eigenvalue-1 eigenvector of the transposed transition matrix.
inline ReversibilityResult is_reversible(const MarkovSpec& chain,
                                         double tol = 1e-10) {
  ReversibilityResult result;
  const auto n = chain.transition.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> es(chain.transition.transpose());
  if (es.info() != Eigen::Success) {
    result.indeterminate = true;
    return result;
  }
  // Eigenvalues of a stochastic matrix lie in the unit disk; the stationary
  // eigenvalue 1 is identified with a fixed margin.
  constexpr double kEigOneTol = 1e-8;
  int unit_count = 0;
  Eigen::Index unit_index = -1;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(es.eigenvalues()[k] - std::complex<double>(1.0, 0.0)) <
        kEigOneTol) {
      ++unit_count;
      unit_index = k;
    }
  }
  if (unit_count != 1) {
    result.indeterminate = true;
    return result;
  }
  Eigen::VectorXd pi = es.eigenvectors().col(unit_index).real();
  if (pi.sum() < 0.0) pi = -pi;
  if (pi.minCoeff() < -kEigOneTol * pi.cwiseAbs().maxCoeff()) {
    result.indeterminate = true;  // not a probability direction
    return result;
  }
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  result.stationary = pi;
  result.reversible = true;
  for (Eigen::Index i = 0; i < n && result.reversible; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double lhs = pi[i] * chain.transition(i, j);
      const double rhs = pi[j] * chain.transition(j, i);
      if (std::abs(lhs - rhs) > tol * (1.0 + std::abs(lhs))) {
        result.reversible = false;
        break;
      }
    }
  }
  return result;
}

}  // namespace trmjls
