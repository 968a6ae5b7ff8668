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
#include <stdexcept>
#include <vector>

#include "trmjls/markov.hpp"
#include "trmjls/matrix_family.hpp"

namespace trmjls {

namespace detail {
inline void require_square_family(const MatrixFamily& y, const char* name) {
  if (y.rows() != y.cols()) {
    throw std::invalid_argument(std::string(name) + ": entries must be square");
  }
}
inline void require_modes(const MatrixFamily& y, const MarkovSpec& chain,
                          const char* name) {
  if (y.size() != chain.modes()) {
    throw std::invalid_argument(std::string(name) +
                                ": mode count != chain mode count");
  }
}
}  // namespace detail

/// Row-weighted congruence mixing: result_i = sum_j p_ij Z_j Y_j Z_j'.
inline MatrixFamily apply_U(const MatrixFamily& Z, const MatrixFamily& Y,
                            const MarkovSpec& chain) {
  detail::require_square_family(Y, "apply_U");
  detail::require_modes(Z, chain, "apply_U");
  detail::require_modes(Y, chain, "apply_U");
  if (Z.cols() != Y.rows()) {
    throw std::invalid_argument("apply_U: Z and Y dimensions disagree");
  }
  const int N = chain.modes();
  std::vector<Eigen::MatrixXd> congruences;
  congruences.reserve(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    congruences.push_back(Z[j] * Y[j] * Z[j].transpose());
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(Z.rows(), Z.rows());
    for (int j = 0; j < N; ++j) {
      const double p = chain.transition(i, j);
      if (p != 0.0) acc.noalias() += p * congruences[static_cast<std::size_t>(j)];
    }
    out.push_back(std::move(acc));
  }
  return MatrixFamily(std::move(out));
}

/// Column-weighted mixing: result_i = sum_j p_ji Y_j.
inline MatrixFamily apply_D(const MatrixFamily& Y, const MarkovSpec& chain) {
  detail::require_modes(Y, chain, "apply_D");
  const int N = chain.modes();
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(Y.rows(), Y.cols());
    for (int j = 0; j < N; ++j) {
      const double p = chain.transition(j, i);
      if (p != 0.0) acc.noalias() += p * Y[j];
    }
    out.push_back(std::move(acc));
  }
  return MatrixFamily(std::move(out));
}

/// Adjoint of apply_U: result_i = Z_i' (sum_j p_ji Y_j) Z_i.
inline MatrixFamily apply_V(const MatrixFamily& Z, const MatrixFamily& Y,
                            const MarkovSpec& chain) {
  detail::require_square_family(Y, "apply_V");
  detail::require_modes(Z, chain, "apply_V");
  detail::require_modes(Y, chain, "apply_V");
  if (Z.rows() != Y.rows()) {
    throw std::invalid_argument("apply_V: Z and Y dimensions disagree");
  }
  const MatrixFamily mixed = apply_D(Y, chain);
  const int N = chain.modes();
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    out.push_back(Z[i].transpose() * mixed[i] * Z[i]);
  }
  return MatrixFamily(std::move(out));
}

/// <Y, Z> = sum_i trace(Y_i' Z_i).
inline double inner_product(const MatrixFamily& Y, const MatrixFamily& Z) {
  if (!same_shape(Y, Z)) {
    throw std::invalid_argument("inner_product: shape mismatch");
  }
  double acc = 0.0;
  for (int i = 0; i < Y.size(); ++i) {
    acc += Y[i].cwiseProduct(Z[i]).sum();
  }
  return acc;
}

/// Norm induced by inner_product.
inline double family_norm(const MatrixFamily& Y) {
  return std::sqrt(inner_product(Y, Y));
}

/// Dense matrix representation of the operator Y -> apply_U(A, Y), under
/// column-stacking vectorization per mode, modes concatenated in index
/// order. Block (i,j) of size n^2 x n^2 equals p_ij * kron(A_j, A_j).
struct OperatorMatrix {
  Eigen::MatrixXd dense;
  int modes = 0;
  Eigen::Index block_dim = 0;  // n; dense is (N n^2) x (N n^2)
};

inline OperatorMatrix build_U_matrix(const MatrixFamily& A,
                                     const MarkovSpec& chain) {
  detail::require_square_family(A, "build_U_matrix");
  detail::require_modes(A, chain, "build_U_matrix");
  const int N = chain.modes();
  const Eigen::Index n = A.rows();
  const Eigen::Index n2 = n * n;
  OperatorMatrix op;
  op.modes = N;
  op.block_dim = n;
  op.dense = Eigen::MatrixXd::Zero(N * n2, N * n2);
  for (int j = 0; j < N; ++j) {
    // kron(A_j, A_j): vec(A_j Y A_j') = kron(A_j, A_j) vec(Y).
    Eigen::MatrixXd kron(n2, n2);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) {
        kron.block(r * n, c * n, n, n) = A[j](r, c) * A[j];
      }
    }
    for (int i = 0; i < N; ++i) {
      const double p = chain.transition(i, j);
      if (p != 0.0) op.dense.block(i * n2, j * n2, n2, n2) = p * kron;
    }
  }
  return op;
}

inline Eigen::VectorXd vectorize(const MatrixFamily& Y) {
  const Eigen::Index n2 = Y.rows() * Y.cols();
  Eigen::VectorXd v(Y.size() * n2);
  for (int i = 0; i < Y.size(); ++i) {
    v.segment(i * n2, n2) =
        Eigen::Map<const Eigen::VectorXd>(Y[i].data(), n2);
  }
  return v;
}

struct SpectralRadiusResult {
  double value = 0.0;
  enum class Method { Dense, PowerIteration } method = Method::Dense;
  bool converged = true;  // power iteration may time out; value is then a
                          // best estimate
  long iterations = 0;
};

/// Dimension at or below which the dense eigendecomposition is used;
/// larger operators fall back to power iteration.
inline constexpr Eigen::Index kDenseEigThreshold = 400;

inline SpectralRadiusResult spectral_radius(const OperatorMatrix& op) {
  SpectralRadiusResult result;
  const Eigen::Index dim = op.dense.rows();
  if (dim <= kDenseEigThreshold) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(op.dense, false);
    result.value = es.eigenvalues().cwiseAbs().maxCoeff();
    result.method = SpectralRadiusResult::Method::Dense;
    return result;
  }
  // Power iteration on the dense matrix, seeded with the vectorized
  // identity family: the operator maps the PSD cone into itself and its
  // spectral radius is attained there.
  result.method = SpectralRadiusResult::Method::PowerIteration;
  const Eigen::Index n = op.block_dim;
  Eigen::VectorXd x = vectorize(MatrixFamily::identity(op.modes, n));
  x /= x.norm();
  double lambda = 0.0;
  constexpr long kMaxIter = 100000;
  constexpr double kRelTol = 1e-10;
  result.converged = false;
  for (long it = 1; it <= kMaxIter; ++it) {
    Eigen::VectorXd y = op.dense * x;
    const double norm = y.norm();
    result.iterations = it;
    if (norm == 0.0) {
      result.value = 0.0;
      result.converged = true;
      return result;
    }
    if (std::abs(norm - lambda) <= kRelTol * std::max(1.0, norm)) {
      lambda = norm;
      result.converged = true;
      break;
    }
    lambda = norm;
    x = y / norm;
  }
  result.value = lambda;
  return result;
}

/// Same power iteration applied mode-wise through apply_U, without
/// materializing the dense operator.
inline SpectralRadiusResult spectral_radius_via_power(const MatrixFamily& A,
                                                      const MarkovSpec& chain) {
  SpectralRadiusResult result;
  result.method = SpectralRadiusResult::Method::PowerIteration;
  MatrixFamily x = MatrixFamily::identity(chain.modes(), A.rows());
  double norm = family_norm(x);
  x = (1.0 / norm) * x;
  double lambda = 0.0;
  constexpr long kMaxIter = 100000;
  constexpr double kRelTol = 1e-10;
  result.converged = false;
  for (long it = 1; it <= kMaxIter; ++it) {
    MatrixFamily y = apply_U(A, x, chain);
    norm = family_norm(y);
    result.iterations = it;
    if (norm == 0.0) {
      result.value = 0.0;
      result.converged = true;
      return result;
    }
    if (std::abs(norm - lambda) <= kRelTol * std::max(1.0, norm)) {
      lambda = norm;
      result.converged = true;
      break;
    }
    lambda = norm;
    x = (1.0 / norm) * y;
  }
  result.value = lambda;
  return result;
}

struct StabilityReport {
  bool stable = false;
  SpectralRadiusResult rho;
};

/// Mean-square stability test: stable iff the spectral radius of the
/// second-moment operator is below 1 (strict margin 1e-12).
inline StabilityReport is_ms_stable(const MatrixFamily& A,
                                    const MarkovSpec& chain) {
  StabilityReport report;
  const Eigen::Index dim = chain.modes() * A.rows() * A.rows();
  if (dim <= kDenseEigThreshold) {
    report.rho = spectral_radius(build_U_matrix(A, chain));
  } else {
    report.rho = spectral_radius_via_power(A, chain);
  }
  report.stable = report.rho.value < 1.0 - 1e-12;
  return report;
}

}  // namespace trmjls
