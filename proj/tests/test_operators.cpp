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
#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace trmjls;
using testsupport::InstanceRng;
using Catch::Approx;

namespace {

MarkovSpec scalar_chain(const Eigen::MatrixXd& p, int horizon = 1) {
  MarkovSpec chain;
  chain.transition = p;
  chain.initial_eta =
      Eigen::VectorXd::Constant(p.rows(), 1.0 / static_cast<double>(p.rows()));
  chain.horizon = horizon;
  return chain;
}

MatrixFamily scalar_family(std::initializer_list<double> values) {
  std::vector<Eigen::MatrixXd> mats;
  for (double v : values) {
    mats.push_back(Eigen::MatrixXd::Constant(1, 1, v));
  }
  return MatrixFamily(std::move(mats));
}

MatrixFamily random_family(InstanceRng& rng, int modes, Eigen::Index n) {
  std::vector<Eigen::MatrixXd> mats;
  for (int i = 0; i < modes; ++i) mats.push_back(rng.matrix(n, n));
  return MatrixFamily(std::move(mats));
}

MatrixFamily random_psd_family(InstanceRng& rng, int modes, Eigen::Index n) {
  std::vector<Eigen::MatrixXd> mats;
  for (int i = 0; i < modes; ++i) mats.push_back(rng.psd(n));
  return MatrixFamily(std::move(mats));
}

}  // namespace

TEST_CASE("apply_U spot checks") {
  SECTION("single mode collapses the sum") {
    const auto chain = scalar_chain(Eigen::MatrixXd::Ones(1, 1));
    InstanceRng rng(1);
    const MatrixFamily z = random_family(rng, 1, 3);
    const MatrixFamily y = random_family(rng, 1, 3);
    const MatrixFamily u = apply_U(z, y, chain);
    REQUIRE((u[0] - z[0] * y[0] * z[0].transpose()).cwiseAbs().maxCoeff() <
            1e-14);
  }

  SECTION("identity scaling family reduces to row mixing") {
    Eigen::MatrixXd p(2, 2);
    p << 0.3, 0.7, 0.6, 0.4;
    const auto chain = scalar_chain(p);
    InstanceRng rng(2);
    const MatrixFamily y = random_family(rng, 2, 2);
    const MatrixFamily u = apply_U(MatrixFamily::identity(2, 2), y, chain);
    REQUIRE((u[0] - (0.3 * y[0] + 0.7 * y[1])).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((u[1] - (0.6 * y[0] + 0.4 * y[1])).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("two-mode scalar arithmetic") {
    Eigen::MatrixXd p(2, 2);
    p << 0.5, 0.5, 0.5, 0.5;
    const MatrixFamily u = apply_U(scalar_family({2, 3}),
                                   scalar_family({1, 1}), scalar_chain(p));
    REQUIRE(u[0](0, 0) == Approx(6.5).margin(1e-15));
    REQUIRE(u[1](0, 0) == Approx(6.5).margin(1e-15));
  }
}

TEST_CASE("apply_D spot checks") {
  SECTION("doubly stochastic with equal entries is a fixed point") {
    Eigen::MatrixXd p(2, 2);
    p << 0.3, 0.7, 0.7, 0.3;
    InstanceRng rng(3);
    const Eigen::MatrixXd y_star = rng.matrix(2, 2);
    const MatrixFamily d = apply_D(MatrixFamily::replicate(2, y_star),
                                   scalar_chain(p));
    REQUIRE((d[0] - y_star).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((d[1] - y_star).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("permutation chain routes by columns") {
    Eigen::MatrixXd p(2, 2);
    p << 0, 1, 1, 0;
    const MatrixFamily d =
        apply_D(scalar_family({1, 2}), scalar_chain(p));
    REQUIRE(d[0](0, 0) == 2.0);
    REQUIRE(d[1](0, 0) == 1.0);
  }

  SECTION("column-weighted scalar sums") {
    Eigen::MatrixXd p(2, 2);
    p << 0.9, 0.1, 0.2, 0.8;
    const MatrixFamily d = apply_D(scalar_family({1, 2}), scalar_chain(p));
    REQUIRE(d[0](0, 0) == Approx(1.3).margin(1e-15));
    REQUIRE(d[1](0, 0) == Approx(1.7).margin(1e-15));
  }
}

TEST_CASE("apply_V reduces to D under identity scaling") {
  Eigen::MatrixXd p(2, 2);
  p << 0.9, 0.1, 0.2, 0.8;
  InstanceRng rng(4);
  const MatrixFamily y = random_family(rng, 2, 2);
  const MatrixFamily v = apply_V(MatrixFamily::identity(2, 2), y,
                                 scalar_chain(p));
  const MatrixFamily d = apply_D(y, scalar_chain(p));
  REQUIRE(testsupport::max_entry_dev(v, d) < 1e-14);

  const auto single = scalar_chain(Eigen::MatrixXd::Ones(1, 1));
  const MatrixFamily z1 = random_family(rng, 1, 3);
  const MatrixFamily y1 = random_family(rng, 1, 3);
  const MatrixFamily v1 = apply_V(z1, y1, single);
  REQUIRE((v1[0] - z1[0].transpose() * y1[0] * z1[0]).cwiseAbs().maxCoeff() <
          1e-14);
}

TEST_CASE("inner_product traces") {
  REQUIRE(inner_product(MatrixFamily::identity(3, 2),
                        MatrixFamily::identity(3, 2)) == Approx(6.0));

  // Symmetric against skew-symmetric is zero blockwise.
  Eigen::MatrixXd sym(2, 2), skew(2, 2);
  sym << 1, 2, 2, 5;
  skew << 0, -3, 3, 0;
  REQUIRE(inner_product(MatrixFamily::replicate(2, sym),
                        MatrixFamily::replicate(2, skew)) ==
          Approx(0.0).margin(1e-15));

  Eigen::MatrixXd y(2, 2), z(2, 2);
  y << 1, 2, 3, 4;
  z << 5, 6, 7, 8;
  REQUIRE(inner_product(MatrixFamily::replicate(1, y),
                        MatrixFamily::replicate(1, z)) == Approx(70.0));
}

TEST_CASE("adjointness of the two mixing operators") {
  InstanceRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int modes = rng.uniform_int(1, 4);
    const Eigen::Index n = rng.uniform_int(1, 3);
    const MarkovSpec chain = testsupport::random_chain(rng, modes, 1);
    const MatrixFamily z = random_family(rng, modes, n);
    const MatrixFamily x = random_family(rng, modes, n);
    const MatrixFamily y = random_family(rng, modes, n);
    const double lhs = inner_product(y, apply_U(z, x, chain));
    const double rhs = inner_product(apply_V(z, y, chain), x);
    REQUIRE(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("operators preserve the PSD cone and are linear") {
  InstanceRng rng(6);
  const MarkovSpec chain = testsupport::random_chain(rng, 3, 1);
  const MatrixFamily z = random_family(rng, 3, 2);
  const MatrixFamily x = random_psd_family(rng, 3, 2);
  for (const MatrixFamily& image :
       {apply_U(z, x, chain), apply_V(z, x, chain), apply_D(x, chain)}) {
    for (int i = 0; i < image.size(); ++i) {
      REQUIRE(is_psd(image[i]));
    }
  }

  const MatrixFamily y = random_family(rng, 3, 2);
  const MatrixFamily x2 = random_family(rng, 3, 2);
  const double alpha = 0.7, beta = -1.3;
  const MatrixFamily lhs =
      apply_U(z, alpha * x2 + beta * y, chain);
  const MatrixFamily rhs =
      alpha * apply_U(z, x2, chain) + beta * apply_U(z, y, chain);
  REQUIRE(testsupport::max_entry_dev(lhs, rhs) <=
          1e-12 * (1.0 + max_abs(rhs)));
}

TEST_CASE("build_U_matrix represents apply_U") {
  SECTION("scalar single mode") {
    MarkovSpec chain = scalar_chain(Eigen::MatrixXd::Ones(1, 1));
    const auto op = build_U_matrix(scalar_family({0.5}), chain);
    REQUIRE(op.dense.rows() == 1);
    REQUIRE(op.dense(0, 0) == Approx(0.25));
  }

  SECTION("zero family gives the zero matrix") {
    InstanceRng rng(7);
    const MarkovSpec chain = testsupport::random_chain(rng, 2, 1);
    const auto op = build_U_matrix(MatrixFamily::zero(2, 2, 2), chain);
    REQUIRE(op.dense.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("dense action agrees with the mode-wise operator") {
    InstanceRng rng(8);
    const MarkovSpec chain = testsupport::random_chain(rng, 2, 1);
    const MatrixFamily a = random_family(rng, 2, 2);
    const auto op = build_U_matrix(a, chain);
    for (int trial = 0; trial < 20; ++trial) {
      const MatrixFamily y = random_family(rng, 2, 2);
      const Eigen::VectorXd direct = vectorize(apply_U(a, y, chain));
      const Eigen::VectorXd via_matrix = op.dense * vectorize(y);
      REQUIRE((direct - via_matrix).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("spectral radius of the second-moment operator") {
  SECTION("scalar mode squares the dynamics") {
    MarkovSpec chain = scalar_chain(Eigen::MatrixXd::Ones(1, 1));
    const auto rho = spectral_radius(build_U_matrix(scalar_family({0.5}),
                                                    chain));
    REQUIRE(rho.value == Approx(0.25).margin(1e-12));
  }

  SECTION("identity family sits on the stability boundary") {
    InstanceRng rng(9);
    const MarkovSpec chain = testsupport::random_chain(rng, 3, 1);
    const auto report = is_ms_stable(MatrixFamily::identity(3, 2), chain);
    REQUIRE(report.rho.value == Approx(1.0).margin(1e-9));
    REQUIRE_FALSE(report.stable);
  }

  SECTION("two-mode scalar instance with known radius") {
    Eigen::MatrixXd p(2, 2);
    p << 0.5, 0.5, 0.5, 0.5;
    const MarkovSpec chain = scalar_chain(p);
    const auto op = build_U_matrix(scalar_family({0.9, 1.2}), chain);
    REQUIRE(op.dense(0, 0) == Approx(0.405));
    REQUIRE(op.dense(0, 1) == Approx(0.72));
    const auto report = is_ms_stable(scalar_family({0.9, 1.2}), chain);
    REQUIRE(report.rho.value == Approx(1.125).margin(1e-12));
    REQUIRE_FALSE(report.stable);
  }

  SECTION("contractive single mode is stable") {
    MarkovSpec chain = scalar_chain(Eigen::MatrixXd::Ones(1, 1));
    const auto report =
        is_ms_stable(MatrixFamily::replicate(
                         1, 0.5 * Eigen::MatrixXd::Identity(2, 2)),
                     chain);
    REQUIRE(report.stable);
    REQUIRE(report.rho.value == Approx(0.25).margin(1e-12));
  }

  SECTION("expanding deterministic mode is unstable") {
    MarkovSpec chain = scalar_chain(Eigen::MatrixXd::Identity(2, 2));
    chain.initial_eta = Eigen::VectorXd::Zero(2);
    chain.initial_eta[0] = 1.0;
    const auto report = is_ms_stable(scalar_family({2.0, 0.1}), chain);
    REQUIRE_FALSE(report.stable);
    REQUIRE(report.rho.value >= 4.0 - 1e-9);
  }
}

TEST_CASE("power iteration agrees with the dense eigensolver") {
  InstanceRng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const MarkovSpec chain = testsupport::random_chain(rng, 3, 1);
    const MatrixFamily a = random_family(rng, 3, 2);
    const auto dense = spectral_radius(build_U_matrix(a, chain));
    const auto power = spectral_radius_via_power(a, chain);
    REQUIRE(power.converged);
    REQUIRE(power.value == Approx(dense.value).epsilon(1e-6));
  }
}

TEST_CASE("large operators take the matrix-free power-iteration path") {
  InstanceRng rng(44);
  const MarkovSpec chain = testsupport::random_chain(rng, 2, 1);
  const MatrixFamily a = random_family(rng, 2, 15);  // dim 450 > threshold
  const auto report = is_ms_stable(a, chain);
  REQUIRE(report.rho.method == SpectralRadiusResult::Method::PowerIteration);
  REQUIRE(report.rho.converged);

  const auto op = build_U_matrix(a, chain);
  const auto via_dense_matrix = spectral_radius(op);
  REQUIRE(via_dense_matrix.method ==
          SpectralRadiusResult::Method::PowerIteration);
  REQUIRE(via_dense_matrix.value == Approx(report.rho.value).epsilon(1e-8));

  Eigen::EigenSolver<Eigen::MatrixXd> es(op.dense, false);
  const double reference = es.eigenvalues().cwiseAbs().maxCoeff();
  REQUIRE(report.rho.value == Approx(reference).epsilon(1e-6));
}
