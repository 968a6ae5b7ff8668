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
#include <string>
#include <vector>

#include "trmjls/markov.hpp"
#include "trmjls/matrix_family.hpp"

namespace trmjls {

/// Scale-relative PSD test: smallest eigenvalue of the symmetrized matrix
/// must be >= -1e-10 * (1 + largest eigenvalue).
inline bool is_psd(const Eigen::MatrixXd& m, double* min_eig = nullptr) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (m + m.transpose()));
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (min_eig) *min_eig = lo;
  return lo >= -1e-10 * (1.0 + std::abs(hi));
}

inline bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline bool is_positive_definite(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff() > 0.0;
}

/// Plant controlled through a time-reversed Markov chain:
///   x(t+1) = A_{theta(t)} x(t) + B_{theta(t)} u(t),  theta(t) = eta(l-t),
/// with stage outputs y(t) = C x + D u, terminal output y(l) = E x(l), and
/// E{x0 x0'} = Delta.
struct ControlPlant {
  MatrixFamily A;        // n x n
  MatrixFamily B;        // n x m
  MatrixFamily C;        // s x n
  MatrixFamily D;        // s x m
  MatrixFamily E;        // n x n terminal weight factor
  Eigen::MatrixXd Delta; // n x n, symmetric PSD
  MarkovSpec chain;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
  Eigen::Index output_dim() const { return C.rows(); }
  int modes() const { return A.size(); }
};

/// Standard Markov jump linear system to be filtered:
///   z(t+1) = F_{eta(t+1)} z(t) + G_{eta(t+1)} w(t),
///   y(t)   = L_{eta(t+1)} z(t) + H_{eta(t+1)} w(t),
/// with w ~ (0, I), E{z0 z0'} = Sigma, and noise orthogonality G_i H_i' = 0,
/// H_i H_i' > 0.
struct FilterPlant {
  MatrixFamily F;        // n x n
  MatrixFamily G;        // n x q
  MatrixFamily L;        // s x n
  MatrixFamily H;        // s x q
  Eigen::MatrixXd Sigma; // n x n, symmetric PSD
  MarkovSpec chain;

  Eigen::Index state_dim() const { return F.rows(); }
  Eigen::Index noise_dim() const { return G.cols(); }
  Eigen::Index output_dim() const { return L.rows(); }
  int modes() const { return F.size(); }
};

/// Diagnostics, not exceptions: one entry per violated invariant, naming the
/// mode index and the failed condition. Empty iff the plant is valid.
inline std::vector<std::string> validate_plant(const ControlPlant& plant) {
  std::vector<std::string> violations = validate_chain(plant.chain);
  const auto n = plant.A.rows();
  const auto m = plant.B.cols();
  const auto s = plant.C.rows();
  const int N = plant.A.size();
  if (plant.A.cols() != n) violations.push_back("A not square");
  if (plant.B.rows() != n) violations.push_back("B row count != n");
  if (plant.C.cols() != n) violations.push_back("C column count != n");
  if (plant.D.rows() != s || plant.D.cols() != m) {
    violations.push_back("D must be s x m");
  }
  if (plant.E.rows() != n || plant.E.cols() != n) {
    violations.push_back("E must be n x n");
  }
  if (plant.B.size() != N || plant.C.size() != N || plant.D.size() != N ||
      plant.E.size() != N) {
    violations.push_back("mode counts differ across A, B, C, D, E");
  }
  if (plant.chain.modes() != N) {
    violations.push_back("chain mode count != family mode count");
  }
  if (plant.Delta.rows() != n || plant.Delta.cols() != n) {
    violations.push_back("Delta must be n x n");
  } else {
    if (!is_symmetric(plant.Delta)) violations.push_back("Delta not symmetric");
    if (!is_psd(plant.Delta)) {
      violations.push_back("Delta not positive semidefinite");
    }
  }
  if (!violations.empty()) return violations;
  for (int i = 0; i < N; ++i) {
    const Eigen::MatrixXd cross = plant.C[i].transpose() * plant.D[i];
    if (cross.size() > 0 && cross.cwiseAbs().maxCoeff() > 1e-12) {
      violations.push_back("C'D not zero at mode " + std::to_string(i));
    }
    if (!is_positive_definite(plant.D[i].transpose() * plant.D[i])) {
      violations.push_back("D'D not positive definite at mode " +
                           std::to_string(i));
    }
  }
  return violations;
}

inline std::vector<std::string> validate_plant(const FilterPlant& plant) {
  std::vector<std::string> violations = validate_chain(plant.chain);
  const auto n = plant.F.rows();
  const auto q = plant.G.cols();
  const auto s = plant.L.rows();
  const int N = plant.F.size();
  if (plant.F.cols() != n) violations.push_back("F not square");
  if (plant.G.rows() != n) violations.push_back("G row count != n");
  if (plant.L.cols() != n) violations.push_back("L column count != n");
  if (plant.H.rows() != s || plant.H.cols() != q) {
    violations.push_back("H must be s x q");
  }
  if (plant.G.size() != N || plant.L.size() != N || plant.H.size() != N) {
    violations.push_back("mode counts differ across F, G, L, H");
  }
  if (plant.chain.modes() != N) {
    violations.push_back("chain mode count != family mode count");
  }
  if (plant.Sigma.rows() != n || plant.Sigma.cols() != n) {
    violations.push_back("Sigma must be n x n");
  } else {
    if (!is_symmetric(plant.Sigma)) violations.push_back("Sigma not symmetric");
    if (!is_psd(plant.Sigma)) {
      violations.push_back("Sigma not positive semidefinite");
    }
  }
  if (!violations.empty()) return violations;
  for (int i = 0; i < N; ++i) {
    const Eigen::MatrixXd cross = plant.G[i] * plant.H[i].transpose();
    if (cross.size() > 0 && cross.cwiseAbs().maxCoeff() > 1e-12) {
      violations.push_back("GH' not zero at mode " + std::to_string(i));
    }
    if (!is_positive_definite(plant.H[i] * plant.H[i].transpose())) {
      violations.push_back("HH' not positive definite at mode " +
                           std::to_string(i));
    }
  }
  return violations;
}

}  // namespace trmjls
