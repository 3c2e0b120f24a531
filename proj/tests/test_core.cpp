// Copyright 2026 The qtraj authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <qtraj/core.hpp>
#include <qtraj/models.hpp>
#include <qtraj/random.hpp>

using namespace qtraj;

TEST_CASE("validate_density accepts the maximally mixed state") {
  const DensityMatrix rho = validate_density(CMatrix::Identity(2, 2) / 2.0);
  CHECK(purity(rho) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("validate_density accepts a pure state") {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  const DensityMatrix rho = validate_density(m);
  CHECK(purity(rho) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("validate_density rejects bad inputs") {
  CMatrix wrong_trace = CMatrix::Zero(2, 2);
  wrong_trace(0, 0) = 1.0;
  wrong_trace(1, 1) = 0.5;
  CHECK_THROWS_AS(validate_density(wrong_trace), TraceNotOne);

  CMatrix not_hermitian = CMatrix::Zero(2, 2);
  not_hermitian(0, 0) = 0.5;
  not_hermitian(1, 1) = 0.5;
  not_hermitian(0, 1) = Complex(0.0, 0.3);
  not_hermitian(1, 0) = Complex(0.0, 0.3);
  CHECK_THROWS_AS(validate_density(not_hermitian), NotHermitian);

  CMatrix not_psd = CMatrix::Zero(2, 2);
  not_psd(0, 0) = 1.5;
  not_psd(1, 1) = -0.5;
  CHECK_THROWS_AS(validate_density(not_psd), NotPSD);
}

TEST_CASE("purity of a diagonal state") {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 0.75;
  m(1, 1) = 0.25;
  CHECK(purity(validate_density(m)) == doctest::Approx(0.625).epsilon(1e-12));
}

TEST_CASE("lyapunov values") {
  CHECK(lyapunov(DensityMatrix::pure(3, 1)) == 0.0);
  CHECK(lyapunov(DensityMatrix::maximally_mixed(2)) ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(lyapunov(DensityMatrix::maximally_mixed(16)) ==
        doctest::Approx(std::sqrt(15.0 / 16.0)).epsilon(1e-12));
}

TEST_CASE("lyapunov vanishes exactly when the state is numerically pure") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const DensityMatrix rho(random_density_matrix(4, rng));
    const bool zero = lyapunov(rho) == 0.0;
    const bool pure = purity(rho) >= 1.0 - 1e-10;
    CHECK(zero == pure);
  }
  const CVector psi = random_unit_vector(4, rng);
  CHECK(lyapunov(DensityMatrix::from_vector(psi)) == 0.0);
}

TEST_CASE("fidelity basics") {
  Rng rng(7);
  const DensityMatrix rho(random_density_matrix(3, rng));
  CHECK(fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-10));

  CHECK(fidelity(DensityMatrix::pure(2, 0), DensityMatrix::pure(2, 1)) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Pure target: F(|0><0|, diag(p, 1-p)) = p.
  CMatrix diag = CMatrix::Zero(2, 2);
  diag(0, 0) = 0.3;
  diag(1, 1) = 0.7;
  CHECK(fidelity(DensityMatrix::pure(2, 0), validate_density(diag)) ==
        doctest::Approx(0.3).epsilon(1e-10));

  CHECK_THROWS_AS(
      fidelity(DensityMatrix::pure(2, 0), DensityMatrix::pure(3, 0)),
      DimensionMismatch);
}

TEST_CASE("fidelity is symmetric and dominates the overlap") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const DensityMatrix a(random_density_matrix(3, rng));
    const DensityMatrix b(random_density_matrix(3, rng));
    const double fab = fidelity(a, b);
    const double fba = fidelity(b, a);
    CHECK(std::abs(fab - fba) <= 1e-9);
    const double overlap = (a.matrix() * b.matrix()).trace().real();
    CHECK(fab >= overlap - 1e-9);
  }
}

TEST_CASE("hermitian_eig on simple matrices") {
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 1.0;
  const SpectralDecomposition sd = hermitian_eig(d);
  CHECK(sd.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sd.eigenvalues(1) == doctest::Approx(2.0).epsilon(1e-12));

  const SpectralDecomposition sx = hermitian_eig(pauli_x());
  CHECK(sx.eigenvalues(0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(sx.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-12));

  CMatrix skew = CMatrix::Zero(2, 2);
  skew(0, 1) = 1.0;
  skew(1, 0) = -1.0;
  CHECK_THROWS_AS(hermitian_eig(skew), NotHermitian);
}

TEST_CASE("hermitian_eig reconstructs random Hermitian matrices") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix h = hermitian_part(ginibre(5, 5, rng));
    const SpectralDecomposition sd = hermitian_eig(h);
    const CMatrix rebuilt =
        sd.basis * sd.eigenvalues.asDiagonal() * sd.basis.adjoint();
    CHECK(frobenius_distance(rebuilt, h) <= 1e-8);
    CHECK(frobenius_distance(sd.basis.adjoint() * sd.basis,
                             CMatrix::Identity(5, 5)) <= 1e-9);
  }
}

TEST_CASE("psd_sqrt on known inputs") {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 4.0 / 5.0;
  m(1, 1) = 1.0 / 5.0;
  const CMatrix s = psd_sqrt(m);
  CHECK(std::abs(s(0, 0).real() - 2.0 / std::sqrt(5.0)) <= 1e-12);
  CHECK(std::abs(s(1, 1).real() - 1.0 / std::sqrt(5.0)) <= 1e-12);

  // A projector is its own square root.
  CMatrix pi = CMatrix::Zero(3, 3);
  pi(0, 0) = 1.0;
  pi(2, 2) = 1.0;
  CHECK(frobenius_distance(psd_sqrt(pi), pi) <= 1e-10);

  CMatrix negative = CMatrix::Identity(2, 2);
  negative(1, 1) = -0.2;
  CHECK_THROWS_AS(psd_sqrt(negative), NotPSD);
}

TEST_CASE("psd_sqrt squares back to the input") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix g = ginibre(4, 4, rng);
    const CMatrix m = hermitian_part(g * g.adjoint());
    const CMatrix s = psd_sqrt(m);
    CHECK(frobenius_distance(s * s, m) <= 1e-8);
  }
}

TEST_CASE("word_operator follows the chronological convention") {
  const KrausChannel ch = amplitude_damping(0.75);

  const WordOperator empty = word_operator(ch, {});
  CHECK(frobenius_distance(empty.word, CMatrix::Identity(2, 2)) == 0.0);
  CHECK(frobenius_distance(empty.moment, CMatrix::Identity(2, 2)) == 0.0);

  const WordOperator single = word_operator(ch, {1});
  CHECK(frobenius_distance(single.word, ch.op(1)) == 0.0);
  CHECK(frobenius_distance(single.moment, ch.op(1).adjoint() * ch.op(1)) <=
        1e-15);

  // Chronological: outcome 0 first, so V_(0,1) = V_1 V_0.
  const WordOperator word01 = word_operator(ch, {0, 1});
  CHECK(frobenius_distance(word01.word, ch.op(1) * ch.op(0)) <= 1e-15);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(word01.moment,
                                            Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);

  CHECK_THROWS_AS(word_operator(ch, {2}), UnknownOutcomeLabel);
}

TEST_CASE("channel validation rejects incomplete families") {
  CMatrix half = CMatrix::Identity(2, 2) * 0.5;
  CHECK_THROWS_AS(KrausChannel({half}), CompletenessViolation);
  CHECK_THROWS_AS(KrausChannel(std::vector<CMatrix>{}), DimensionMismatch);
}

TEST_CASE("moments of fixed length telescope to the identity") {
  const std::vector<KrausChannel> channels = {
      amplitude_damping(0.4), random_channel(3, 2, 31), random_channel(4, 2, 32)};
  for (const KrausChannel& ch : channels) {
    const CMatrix identity = CMatrix::Identity(ch.dim(), ch.dim());
    CMatrix one_step = CMatrix::Zero(ch.dim(), ch.dim());
    for (const CMatrix& v : ch.ops()) one_step += v.adjoint() * v;
    CHECK(frobenius_distance(one_step, identity) <= 1e-9);
    for (int p = 1; p <= 4; ++p) {
      CMatrix sum = CMatrix::Zero(ch.dim(), ch.dim());
      double min_eig = 0.0;
      for_each_word(ch, p, [&](const MeasurementRecord&, const CMatrix& v) {
        const CMatrix moment = hermitian_part(v.adjoint() * v);
        Eigen::SelfAdjointEigenSolver<CMatrix> es(moment,
                                                  Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        sum += moment;
      });
      CHECK(min_eig >= -1e-12);
      CHECK(frobenius_distance(sum, identity) <= 1e-8);
    }
  }
}

TEST_CASE("validated states have purity between 1/d and one") {
  Rng rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    const Index d = 2 + trial % 3;
    const DensityMatrix rho(random_density_matrix(d, rng));
    const double p = purity(rho);
    CHECK(p >= 1.0 / static_cast<double>(d) - 1e-12);
    CHECK(p <= 1.0 + 1e-10);
  }
}

TEST_CASE("projector validation") {
  CMatrix pi = CMatrix::Zero(3, 3);
  pi(0, 0) = 1.0;
  pi(1, 1) = 1.0;
  const Projector proj(pi);
  CHECK(proj.rank() == 2);
  CHECK(frobenius_distance(proj.frame() * proj.frame().adjoint(), pi) <= 1e-9);

  CMatrix not_idempotent = CMatrix::Identity(2, 2) * 0.5;
  CHECK_THROWS_AS(Projector{not_idempotent}, NumericalInconsistency);

  Rng rng(3);
  const CMatrix frame = haar_frame(4, 2, rng);
  const Projector from_frame = Projector::from_frame(frame);
  CHECK(from_frame.rank() == 2);
}

TEST_CASE("outcome labels resolve to indices") {
  const KrausChannel ch = amplitude_damping(0.5);
  CHECK(ch.label_index("0") == 0);
  CHECK(ch.label_index("1") == 1);
  CHECK_THROWS_AS(ch.label_index("up"), UnknownOutcomeLabel);
}

TEST_CASE("word_space_size guards the cap") {
  CHECK(word_space_size(2, 10) == 1024);
  CHECK_THROWS_AS(word_space_size(2, 40), EnumerationTooLarge);
  CHECK_THROWS_AS(word_space_size(10, 7, 1000000), EnumerationTooLarge);
}
