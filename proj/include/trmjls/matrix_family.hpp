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
#include <string>
#include <utility>
#include <vector>

namespace trmjls {

/// An ordered tuple of N real matrices of identical shape, one per Markov
/// mode. All mode-indexed system data (A, B, C, D, E, gains, cost-to-go
/// matrices, second moments) are instances of this type.
class MatrixFamily {
 public:
  MatrixFamily() = default;

  explicit MatrixFamily(std::vector<Eigen::MatrixXd> entries)
      : entries_(std::move(entries)) {
    if (entries_.empty()) {
      throw std::invalid_argument("MatrixFamily: mode count must be >= 1");
    }
    const auto r = entries_.front().rows();
    const auto c = entries_.front().cols();
    for (const auto& m : entries_) {
      if (m.rows() != r || m.cols() != c) {
        throw std::invalid_argument(
            "MatrixFamily: all matrices must share identical dimensions");
      }
    }
  }

  /// N copies of the same matrix.
  static MatrixFamily replicate(int modes, const Eigen::MatrixXd& m) {
    return MatrixFamily(std::vector<Eigen::MatrixXd>(
        static_cast<std::size_t>(modes), m));
  }

  static MatrixFamily zero(int modes, Eigen::Index rows, Eigen::Index cols) {
    return replicate(modes, Eigen::MatrixXd::Zero(rows, cols));
  }

  static MatrixFamily identity(int modes, Eigen::Index n) {
    return replicate(modes, Eigen::MatrixXd::Identity(n, n));
  }

  int size() const { return static_cast<int>(entries_.size()); }
  Eigen::Index rows() const { return entries_.front().rows(); }
  Eigen::Index cols() const { return entries_.front().cols(); }

  const Eigen::MatrixXd& operator[](int i) const {
    return entries_[static_cast<std::size_t>(i)];
  }

  const std::vector<Eigen::MatrixXd>& entries() const { return entries_; }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<Eigen::MatrixXd> entries_;
};

inline bool same_shape(const MatrixFamily& a, const MatrixFamily& b) {
  return a.size() == b.size() && a.rows() == b.rows() && a.cols() == b.cols();
}

inline MatrixFamily operator+(const MatrixFamily& a, const MatrixFamily& b) {
  if (!same_shape(a, b)) {
    throw std::invalid_argument("MatrixFamily: shape mismatch in +");
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) out.push_back(a[i] + b[i]);
  return MatrixFamily(std::move(out));
}

inline MatrixFamily operator-(const MatrixFamily& a, const MatrixFamily& b) {
  if (!same_shape(a, b)) {
    throw std::invalid_argument("MatrixFamily: shape mismatch in -");
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) out.push_back(a[i] - b[i]);
  return MatrixFamily(std::move(out));
}

inline MatrixFamily operator*(double alpha, const MatrixFamily& a) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) out.push_back(alpha * a[i]);
  return MatrixFamily(std::move(out));
}

/// Mode-wise scalar scaling: (alpha_1 Y_1, ..., alpha_N Y_N).
inline MatrixFamily scale_by_modes(const Eigen::VectorXd& alpha,
                                   const MatrixFamily& a) {
  if (alpha.size() != a.size()) {
    throw std::invalid_argument("scale_by_modes: weight count != mode count");
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) out.push_back(alpha[i] * a[i]);
  return MatrixFamily(std::move(out));
}

inline MatrixFamily transpose_each(const MatrixFamily& a) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) out.push_back(a[i].transpose());
  return MatrixFamily(std::move(out));
}

inline MatrixFamily symmetrize_each(const MatrixFamily& a) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) {
    out.push_back(0.5 * (a[i] + a[i].transpose()));
  }
  return MatrixFamily(std::move(out));
}

/// Largest absolute entry across all modes.
inline double max_abs(const MatrixFamily& a) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i].size() > 0) m = std::max(m, a[i].cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace trmjls
