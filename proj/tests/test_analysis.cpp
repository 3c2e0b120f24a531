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

using namespace qtraj;

TEST_CASE("expected Lyapunov value vanishes on pure states") {
  const KrausChannel ch = amplitude_damping(0.75);
  for (int p = 1; p <= 3; ++p)
    CHECK(exact_expected_lyapunov(ch, DensityMatrix::pure(2, 1), p) == 0.0);
}

TEST_CASE("amplitude damping expectation from the mixed state") {
  // Two-outcome enumeration: only the no-decay word contributes
  // sqrt((1-a)/2), the decay word lands on a pure state.
  const KrausChannel ch = amplitude_damping(0.75);
  const double value =
      exact_expected_lyapunov(ch, DensityMatrix::maximally_mixed(2), 1);
  CHECK(value == doctest::Approx(std::sqrt(0.125)).epsilon(1e-12));
}

TEST_CASE("unitary channels conserve the expected Lyapunov value") {
  Rng rng(4);
  const KrausChannel ch = random_unitary_channel(3, 2, 12);
  for (int trial = 0; trial < 5; ++trial) {
    const DensityMatrix rho(random_density_matrix(3, rng));
    const double v = lyapunov(rho);
    for (int p = 1; p <= 3; ++p)
      CHECK(std::abs(exact_expected_lyapunov(ch, rho, p) - v) <= 1e-10);
  }
}

TEST_CASE("lambda_of_state on canonical channels") {
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(2);
  CHECK(lambda_of_state(amplitude_damping(0.75), mixed, 1) ==
        doctest::Approx(0.5).epsilon(1e-12));

  const KrausChannel unitary = random_unitary_channel(2, 2, 5);
  CHECK(lambda_of_state(unitary, mixed, 2) ==
        doctest::Approx(1.0).epsilon(1e-10));

  const KrausChannel rank_one = rank_one_channel(2, 6);
  CHECK(lambda_of_state(rank_one, mixed, 1) == 0.0);

  CHECK_THROWS_AS(
      lambda_of_state(amplitude_damping(0.5), DensityMatrix::pure(2, 0), 1),
      StateTooPure);
}

TEST_CASE("lambda_of_state stays within the unit interval") {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const KrausChannel ch = random_channel(3, 2, 100 + trial);
    const DensityMatrix rho(random_density_matrix(3, rng));
    for (int p = 1; p <= 2; ++p) {
      const double lambda = lambda_of_state(ch, rho, p);
      CHECK(lambda >= 0.0);
      CHECK(lambda <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("supermartingale check over random states") {
  Rng rng(23);
  std::vector<DensityMatrix> states;
  for (int s = 0; s < 200; ++s)
    states.emplace_back(random_density_matrix(2, rng));

  const SupermartingaleReport report =
      supermartingale_check(amplitude_damping(0.75), states, {1, 2, 3});
  CHECK(report.worst_margin <= 1e-10);
  CHECK(report.checks == 600);
}

TEST_CASE("supermartingale equality for unitary channels") {
  Rng rng(31);
  const KrausChannel ch = random_unitary_channel(2, 2, 44);
  std::vector<DensityMatrix> states;
  for (int s = 0; s < 50; ++s) states.emplace_back(random_density_matrix(2, rng));
  const SupermartingaleReport report = supermartingale_check(ch, states, {1, 2});
  CHECK(std::abs(report.worst_margin) <= 1e-10);
}

TEST_CASE("supermartingale check on the two-qubit spin chain") {
  SpinChainParams params;
  params.n_qubits = 2;
  const KrausChannel ch = spin_chain_channel(params);
  Rng rng(37);
  std::vector<DensityMatrix> states;
  for (int s = 0; s < 40; ++s) states.emplace_back(random_density_matrix(4, rng));
  const SupermartingaleReport report = supermartingale_check(ch, states, {1, 2});
  CHECK(report.worst_margin <= 1e-10);
}

TEST_CASE("supermartingale violations carry a witness") {
  // A deliberately broken "channel" built by bypassing validation.
  Tolerances& tol = tolerances();
  const double saved_completeness = tol.completeness;
  const double saved_drift = tol.prob_drift;
  tol.completeness = 10.0;
  tol.prob_drift = 10.0;
  const KrausChannel inflated({CMatrix::Identity(2, 2) * 1.2});
  std::vector<DensityMatrix> states = {DensityMatrix::maximally_mixed(2)};
  CHECK_THROWS_AS(supermartingale_check(inflated, states, {1}), ViolationFound);
  tol.completeness = saved_completeness;
  tol.prob_drift = saved_drift;
}

TEST_CASE("tower consistency of exact expectations") {
  const std::vector<KrausChannel> channels = {amplitude_damping(0.6),
                                              random_channel(2, 2, 71)};
  Rng rng(41);
  for (const KrausChannel& ch : channels) {
    const DensityMatrix rho(random_density_matrix(2, rng));
    for (int p = 1; p <= 3; ++p) {
      for (int q = 1; q <= 3; ++q) {
        const double joint = exact_expected_lyapunov(ch, rho, p + q);
        // Conditioning route: average the q-step expectation over the
        // unnormalized p-step branches (the summand is 1-homogeneous).
        double conditioned = 0.0;
        for_each_word(ch, p, [&](const MeasurementRecord&, const CMatrix& v) {
          const CMatrix x = hermitian_part(v * rho.matrix() * v.adjoint());
          const double weight = x.trace().real();
          if (weight <= 1e-14) return;
          conditioned +=
              weight * exact_expected_lyapunov(ch, DensityMatrix(x / weight), q);
        });
        CHECK(std::abs(joint - conditioned) <= 1e-9);
      }
    }
  }
}

TEST_CASE("per-word audit matches hand values") {
  const KrausChannel ch = amplitude_damping(0.75);
  const DensityMatrix rho0 = DensityMatrix::maximally_mixed(2);
  const std::vector<WordContribution> rows = expectation_audit(ch, rho0, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].word == MeasurementRecord{0});
  CHECK(rows[0].probability == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(rows[0].contribution ==
        doctest::Approx(std::sqrt(0.125)).epsilon(1e-12));
  CHECK(rows[1].probability == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(rows[1].contribution == 0.0);

  double total = 0.0;
  for (const WordContribution& row : rows) total += row.contribution;
  CHECK(total == doctest::Approx(exact_expected_lyapunov(ch, rho0, 1)));

  const std::string csv = audit_csv(rows);
  CHECK(csv.rfind("word,probability,contribution\n0,0.625,", 0) == 0);

  const ExpectationReport report = expected_lyapunov_report(ch, rho0, 2);
  CHECK(report.words_enumerated == 4);
  CHECK(report.p == 2);
  CHECK(report.value == doctest::Approx(exact_expected_lyapunov(ch, rho0, 2)));
}

TEST_CASE("reports render as key=value text") {
  const KrausChannel ch = amplitude_damping(0.5);
  std::vector<DensityMatrix> states = {DensityMatrix::maximally_mixed(2)};
  const SupermartingaleReport sm = supermartingale_check(ch, states, {1});
  CHECK(to_key_value(sm).find("checks=1\n") != std::string::npos);
  const MonteCarloComparison mc =
      monte_carlo_vs_exact(ch, DensityMatrix::maximally_mixed(2), 2, 200, 9);
  CHECK(to_key_value(mc).find("pass=") != std::string::npos);
}

TEST_CASE("enumeration cap is enforced") {
  const KrausChannel ch = amplitude_damping(0.5);
  CHECK_THROWS_AS(
      exact_expected_lyapunov(ch, DensityMatrix::maximally_mixed(2), 25),
      EnumerationTooLarge);
}

TEST_CASE("monte carlo cross-validation") {
  const KrausChannel ch = amplitude_damping(0.75);
  const DensityMatrix rho0 = DensityMatrix::maximally_mixed(2);

  const MonteCarloComparison at_zero = monte_carlo_vs_exact(ch, rho0, 0, 50, 3);
  CHECK(at_zero.pass);
  CHECK(at_zero.mc_mean == doctest::Approx(at_zero.exact).epsilon(1e-12));

  const MonteCarloComparison damped =
      monte_carlo_vs_exact(ch, rho0, 8, 20000, 1001);
  CHECK(damped.pass);

  SpinChainParams params;
  params.n_qubits = 1;
  const MonteCarloComparison chain = monte_carlo_vs_exact(
      spin_chain_channel(params), DensityMatrix::maximally_mixed(2), 6, 20000,
      1002);
  CHECK(chain.pass);
}
