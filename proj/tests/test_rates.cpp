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

#include <qtraj/analysis.hpp>
#include <qtraj/models.hpp>
#include <qtraj/rates.hpp>

using namespace qtraj;

TEST_CASE("pair determinants on canonical inputs") {
  const CMatrix identity = CMatrix::Identity(3, 3);
  CVector e0 = CVector::Zero(3), e1 = CVector::Zero(3);
  e0(0) = 1.0;
  e1(1) = 1.0;
  CHECK(pair_determinant(identity, e0, e1) == doctest::Approx(1.0));

  Rng rng(2);
  const CVector phi = random_unit_vector(3, rng);
  const CMatrix rank_one = phi * phi.adjoint();
  CHECK(pair_determinant(rank_one, e0, e1) == 0.0);

  const double a = 0.4;
  CMatrix damped = CMatrix::Zero(2, 2);
  damped(0, 0) = 1.0;
  damped(1, 1) = 1.0 - a;
  CVector f0 = CVector::Zero(2), f1 = CVector::Zero(2);
  f0(0) = 1.0;
  f1(1) = 1.0;
  CHECK(pair_determinant(damped, f0, f1) == doctest::Approx(1.0 - a));

  CHECK_THROWS_AS(pair_determinant(identity, e0, e0), NotOrthonormal);
}

TEST_CASE("pair weights live on the simplex") {
  const PairWeights uniform = PairWeights::uniform(4);
  CHECK(uniform.flat().sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(uniform.flat().size() == 6);

  const PairWeights vertex = PairWeights::vertex(4, 1, 3);
  CHECK(vertex.weight(1, 3) == doctest::Approx(1.0));
  CHECK(vertex.flat().sum() == doctest::Approx(1.0));

  RVector p(3);
  p << 0.5, 0.3, 0.2;
  const PairWeights induced = PairWeights::from_eigenvalues(p);
  CHECK(induced.flat().sum() == doctest::Approx(1.0).epsilon(1e-9));
  const double denom = 1.0 - p.squaredNorm();
  CHECK(induced.weight(0, 1) ==
        doctest::Approx(2.0 * 0.5 * 0.3 / denom).epsilon(1e-9));

  CHECK_THROWS_AS(PairWeights(3, RVector::Constant(3, 0.5)),
                  InvalidProbabilities);
}

TEST_CASE("rate objective is one for unitary channels at any point") {
  const KrausChannel ch = random_unitary_channel(3, 2, 19);
  Rng rng(20);
  for (int p = 1; p <= 3; ++p) {
    for (int trial = 0; trial < 5; ++trial) {
      RVector logits(PairWeights::pair_count(3));
      for (Index i = 0; i < logits.size(); ++i) logits(i) = rng.gaussian();
      const PairWeights w(3, detail::softmax(logits));
      const CMatrix basis = haar_unitary(3, rng);
      CHECK(rate_objective(ch, p, w, basis) ==
            doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("rate objective vanishes for rank-one channels") {
  const KrausChannel ch = rank_one_channel(3, 5);
  const PairWeights w = PairWeights::uniform(3);
  CHECK(rate_objective(ch, 1, w, CMatrix::Identity(3, 3)) == 0.0);
  Rng rng(6);
  CHECK(rate_objective(ch, 2, w, haar_unitary(3, rng)) == 0.0);
}

TEST_CASE("qubit objective is weight- and basis-independent") {
  const KrausChannel ch = amplitude_damping(0.37);
  // Single pair: the only weight vector is w = (1); sweep bases.
  const PairWeights w = PairWeights::uniform(2);
  Rng rng(8);
  double sum_dets = 0.0;
  for (const CMatrix& v : ch.ops())
    sum_dets += std::abs(v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0));
  double lo = 2.0, hi = -1.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double value = rate_objective(ch, 1, w, haar_unitary(2, rng));
    lo = std::min(lo, value);
    hi = std::max(hi, value);
  }
  CHECK(hi - lo <= 1e-8);
  CHECK(hi == doctest::Approx(sum_dets).epsilon(1e-9));
}

TEST_CASE("optimizer nails the amplitude damping closed form") {
  const KrausChannel ch = amplitude_damping(0.75);
  RateOptions options;
  options.seed = 3;
  const RateEstimate one = optimize_rate(ch, 1, options);
  CHECK(std::abs(one.lambda_hat - 0.5) <= 1e-6);
  CHECK(std::abs(one.gamma_hat - std::log(2.0)) <= 1e-6);

  const RateEstimate two = optimize_rate(ch, 2, options);
  CHECK(std::abs(two.gamma_hat - 2.0 * one.gamma_hat) <= 1e-6);
  CHECK(two.restart_best.size() == static_cast<std::size_t>(two.restarts));
}

TEST_CASE("optimizer reports lambda one for unitary channels") {
  const KrausChannel ch = random_unitary_channel(3, 2, 61);
  RateOptions options;
  options.seed = 4;
  options.restarts = 8;
  for (int p : {1, 2}) {
    const RateEstimate est = optimize_rate(ch, p, options);
    CHECK(est.lambda_hat == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(est.gamma_hat == 0.0);
  }
}

TEST_CASE("optimizer reports infinite rate for rank-one channels") {
  const KrausChannel ch = rank_one_channel(4, 9);
  RateOptions options;
  options.seed = 5;
  options.restarts = 8;
  const RateEstimate est = optimize_rate(ch, 1, options);
  CHECK(est.lambda_hat == 0.0);
  CHECK(std::isinf(est.gamma_hat));
}

TEST_CASE("two-qubit spin chain: one-step dark, two-step rate positive") {
  SpinChainParams params;
  params.n_qubits = 2;
  const KrausChannel ch = spin_chain_channel(params);
  RateOptions options;
  options.seed = 6;
  const RateEstimate one = optimize_rate(ch, 1, options);
  CHECK(one.lambda_hat >= 1.0 - 1e-4);
  CHECK(one.gamma_hat <= 0.01);
  const RateEstimate two = optimize_rate(ch, 2, options);
  CHECK(two.gamma_hat >= 0.01);
}

TEST_CASE("optimizer value dominates sampled contraction factors") {
  const KrausChannel ch = amplitude_damping(0.75);
  RateOptions options;
  options.seed = 7;
  const RateEstimate est = optimize_rate(ch, 1, options);
  Rng rng(71);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const DensityMatrix rho(random_density_matrix(2, rng));
    worst = std::max(worst, lambda_of_state(ch, rho, 1));
  }
  CHECK(est.lambda_hat >= worst - 1e-9);

  // Induced bound: exact E[V(rho_n)] <= V(rho_0) e^{-gamma n}.
  const DensityMatrix rho0 = DensityMatrix::maximally_mixed(2);
  const double v0 = lyapunov(rho0);
  for (int n = 0; n <= 10; ++n) {
    const double exact = exact_expected_lyapunov(ch, rho0, n);
    CHECK(exact <= v0 * std::exp(-est.gamma_hat * n) + 1e-9);
  }
}

TEST_CASE("qubit closed form") {
  CHECK(qubit_rate_closed_form(amplitude_damping(0.75), 1) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(qubit_rate_closed_form(amplitude_damping(0.75), 3) ==
        doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));

  // Convex mixture of unitaries: sum |det| = q + (1 - q) = 1, rate zero.
  Rng rng(10);
  const KrausChannel mixture = random_unitary_channel(
      (RVector(2) << 0.3, 0.7).finished(),
      {haar_unitary(2, rng), haar_unitary(2, rng)});
  CHECK(std::abs(qubit_rate_closed_form(mixture, 2)) <= 1e-12);

  CHECK_THROWS_AS(qubit_rate_closed_form(rank_one_channel(3, 2), 1),
                  DimensionNotTwo);

  // Multiplicativity against the optimizer.
  RateOptions options;
  options.seed = 11;
  const RateEstimate est = optimize_rate(amplitude_damping(0.75), 2, options);
  CHECK(std::abs(est.gamma_hat -
                 qubit_rate_closed_form(amplitude_damping(0.75), 2)) <= 1e-6);
}

TEST_CASE("empirical rate on synthetic and exact series") {
  RVector series(30);
  for (int n = 0; n < 30; ++n) series(n) = std::exp(-0.3 * n);
  const EmpiricalRate fit = empirical_rate(series, 0, 29);
  CHECK(std::abs(fit.rate - 0.3) <= 1e-12);
  CHECK(fit.residual_rms <= 1e-12);

  const EmpiricalRate flat = empirical_rate(RVector::Constant(10, 0.4), 0, 9);
  CHECK(std::abs(flat.rate) <= 1e-14);

  // Amplitude damping from the mixed state decays exactly geometrically.
  const KrausChannel ch = amplitude_damping(0.75);
  const DensityMatrix rho0 = DensityMatrix::maximally_mixed(2);
  RVector exact(9);
  for (int n = 0; n <= 8; ++n)
    exact(n) = exact_expected_lyapunov(ch, rho0, n) / lyapunov(rho0);
  const EmpiricalRate damped = empirical_rate(exact, 0, 8);
  CHECK(std::abs(damped.rate - std::log(2.0)) <= 1e-6);

  RVector with_zero = series;
  with_zero(5) = 0.0;
  CHECK_THROWS_AS(empirical_rate(with_zero, 0, 29), NonPositiveSeries);
  CHECK_THROWS_AS(empirical_rate(series, 10, 10), ParamOutOfRange);
}

TEST_CASE("superadditivity table") {
  RateOptions options;
  options.seed = 13;
  const SuperadditivityReport qubit =
      superadditivity_report(amplitude_damping(0.6), 4, 0.02, options);
  CHECK(qubit.pass);
  const double per_step = qubit.rows[0].gamma_hat;
  for (const auto& row : qubit.rows)
    CHECK(std::abs(row.gamma_hat / row.p - per_step) <= 1e-6);
  CHECK(qubit.sup_gamma_over_p == doctest::Approx(per_step).epsilon(1e-9));

  options.restarts = 8;
  const SuperadditivityReport unitary =
      superadditivity_report(random_unitary_channel(2, 2, 14), 3, 0.02, options);
  CHECK(unitary.pass);
  for (const auto& row : unitary.rows) CHECK(row.gamma_hat == 0.0);
}

TEST_CASE("estimates stay within the Cauchy-Schwarz bound on random channels") {
  RateOptions options;
  options.restarts = 6;
  options.evals_per_restart = 400;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const KrausChannel ch = random_channel(3, 2, 900 + seed);
    options.seed = seed;
    for (int p : {1, 2}) {
      const RateEstimate est = optimize_rate(ch, p, options);
      CHECK(est.lambda_hat <= 1.0);
      CHECK(est.gamma_hat >= 0.0);
    }
  }
}

TEST_CASE("sub-multiplicativity with slack on the two-qubit chain") {
  SpinChainParams params;
  params.n_qubits = 2;
  const KrausChannel ch = spin_chain_channel(params);
  RateOptions options;
  options.seed = 15;
  std::vector<double> lambda(5, 0.0);
  for (int p = 1; p <= 4; ++p)
    lambda[p] = optimize_rate(ch, p, options).lambda_hat;
  for (int p = 1; p <= 2; ++p)
    for (int q = 1; q <= 2; ++q)
      CHECK(lambda[p + q] <= lambda[p] * lambda[q] + 0.02);
}

TEST_CASE("diagonal evolution is one-step dark everywhere") {
  // Bx = Bz = 0 leaves H diagonal, so U is diagonal and every projector
  // built from basis states is undistorted: the one-step rate vanishes.
  SpinChainParams params;
  params.n_qubits = 2;
  params.field_x = 0.0;
  params.field_z = 0.0;
  const KrausChannel ch = spin_chain_channel(params);
  RateOptions options;
  options.seed = 17;
  const RateEstimate est = optimize_rate(ch, 1, options);
  CHECK(est.gamma_hat <= 1e-9);
}

TEST_CASE("purification verdicts") {
  VerdictOptions options;
  options.rates.seed = 16;
  options.rates.restarts = 12;
  options.dark.seed = 16;

  const PurificationReport rank_one =
      purification_verdict(rank_one_channel(3, 21), options);
  CHECK(rank_one.verdict == ChannelClass::Purifying);
  CHECK(rank_one.operational_p_bar == 1);

  const PurificationReport unitary =
      purification_verdict(random_unitary_channel(3, 2, 22), options);
  CHECK(unitary.verdict == ChannelClass::DarkCandidate);
  REQUIRE(unitary.dark_candidate.has_value());
  CHECK(unitary.dark_candidate->max_residual <= 1e-6);

  SpinChainParams params;
  params.n_qubits = 2;
  const PurificationReport chain =
      purification_verdict(spin_chain_channel(params), options);
  CHECK(chain.verdict == ChannelClass::Purifying);
  CHECK(chain.operational_p_bar == 2);
  REQUIRE(chain.gamma_head.size() == 2);
  CHECK(chain.gamma_head[0] <= 0.01);
  CHECK(chain.gamma_head[1] > 0.01);
}
