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

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <qtraj/core.hpp>
#include <qtraj/random.hpp>

namespace qtraj {

// ---------------------------------------------------------------------------
// Spin chain with a measured end site
// ---------------------------------------------------------------------------

/// Ising chain in a tilted field, projectively measured on the last site.
struct SpinChainParams {
  int n_qubits = 4;
  double coupling = 1.0;  // J
  double tau = 1.0;       // evolution time per measurement
  double field_x = 1.0;   // B_x
  double field_z = 1.0;   // B_z
  int qubit_cap = 6;      // raise explicitly for larger chains
};

inline CMatrix pauli_x() {
  CMatrix s(2, 2);
  s << Complex(0, 0), Complex(1, 0), Complex(1, 0), Complex(0, 0);
  return s;
}

inline CMatrix pauli_z() {
  CMatrix s(2, 2);
  s << Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(-1, 0);
  return s;
}

/// Embeds a single-qubit operator at `site` (1-based). Site 1 is the leftmost
/// (most significant) tensor factor, site n the rightmost.
inline CMatrix site_operator(int n_qubits, int site, const CMatrix& single) {
  const Index left = Index(1) << (site - 1);
  const Index right = Index(1) << (n_qubits - site);
  return kron(kron(CMatrix::Identity(left, left), single),
              CMatrix::Identity(right, right));
}

/// H = -J sum_j sz_j sz_{j+1} - Bx sum_j sx_j - Bz sum_j sz_j.
/// The coupling sum is empty for a single qubit.
inline CMatrix spin_chain_hamiltonian(const SpinChainParams& params) {
  if (params.n_qubits < 1)
    throw ParamOutOfRange("n_qubits must be >= 1");
  if (params.n_qubits > params.qubit_cap)
    throw DimensionCapExceeded("n_qubits " + std::to_string(params.n_qubits) +
                               " above cap " + std::to_string(params.qubit_cap));
  const int n = params.n_qubits;
  const Index d = Index(1) << n;
  CMatrix h = CMatrix::Zero(d, d);
  const CMatrix sx = pauli_x();
  const CMatrix sz = pauli_z();
  for (int j = 1; j < n; ++j)
    h -= params.coupling * site_operator(n, j, sz) * site_operator(n, j + 1, sz);
  for (int j = 1; j <= n; ++j) {
    h -= params.field_x * site_operator(n, j, sx);
    h -= params.field_z * site_operator(n, j, sz);
  }
  return h;
}

/// U = exp(-i tau H) through the eigendecomposition of Hermitian H, which
/// keeps U unitary up to eigensolver error.
inline CMatrix hermitian_expm(const CMatrix& h, double tau) {
  const SpectralDecomposition sd = hermitian_eig(h);
  CVector phases(sd.eigenvalues.size());
  for (Index i = 0; i < sd.eigenvalues.size(); ++i) {
    const double angle = -tau * sd.eigenvalues(i);
    phases(i) = Complex(std::cos(angle), std::sin(angle));
  }
  return sd.basis * phases.asDiagonal() * sd.basis.adjoint();
}

/// Kraus pair {P_0 U, P_1 U}: unitary evolution for time tau followed by a
/// projective measurement of the last spin along z.
inline KrausChannel spin_chain_channel(const SpinChainParams& params) {
  const CMatrix h = spin_chain_hamiltonian(params);
  const CMatrix u = hermitian_expm(h, params.tau);
  const Index d = u.rows();
  const Index half = d / 2;
  CMatrix ket0 = CMatrix::Zero(2, 2);
  ket0(0, 0) = Complex(1, 0);
  CMatrix ket1 = CMatrix::Zero(2, 2);
  ket1(1, 1) = Complex(1, 0);
  const CMatrix p0 = kron(CMatrix::Identity(half, half), ket0);
  const CMatrix p1 = kron(CMatrix::Identity(half, half), ket1);
  return KrausChannel({p0 * u, p1 * u}, {"0", "1"});
}

// ---------------------------------------------------------------------------
// Canonical test channels
// ---------------------------------------------------------------------------

/// Qubit amplitude damping with decay probability a.
inline KrausChannel amplitude_damping(double a) {
  if (a < 0.0 || a > 1.0)
    throw ParamOutOfRange("damping parameter must lie in [0, 1]");
  CMatrix v0 = CMatrix::Zero(2, 2);
  v0(0, 0) = Complex(1, 0);
  v0(1, 1) = Complex(std::sqrt(1.0 - a), 0);
  CMatrix v1 = CMatrix::Zero(2, 2);
  v1(0, 1) = Complex(std::sqrt(a), 0);
  return KrausChannel({v0, v1}, {"0", "1"});
}

/// V_i = sqrt(q_i) U_i. The whole space is dark: purity is constant along
/// every trajectory of such a channel.
inline KrausChannel random_unitary_channel(const RVector& probs,
                                           const std::vector<CMatrix>& unitaries) {
  if (probs.size() != static_cast<Index>(unitaries.size()) || probs.size() < 1)
    throw InvalidProbabilities("need one probability per unitary");
  double sum = 0.0;
  for (Index i = 0; i < probs.size(); ++i) {
    if (probs(i) < 0.0) throw InvalidProbabilities("negative probability");
    sum += probs(i);
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw InvalidProbabilities("probabilities sum to " + std::to_string(sum));
  const Index d = unitaries.front().rows();
  std::vector<CMatrix> ops;
  ops.reserve(unitaries.size());
  for (std::size_t i = 0; i < unitaries.size(); ++i) {
    const CMatrix& u = unitaries[i];
    const double defect =
        frobenius_distance(u.adjoint() * u, CMatrix::Identity(d, d));
    if (defect > tolerances().spectral_input)
      throw NotUnitary("unitarity defect " + std::to_string(defect));
    ops.push_back(std::sqrt(probs(static_cast<Index>(i))) * u);
  }
  return KrausChannel(std::move(ops));
}

/// Haar-random unitaries with uniform branch probabilities.
inline KrausChannel random_unitary_channel(Index d, std::size_t count,
                                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CMatrix> unitaries;
  unitaries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) unitaries.push_back(haar_unitary(d, rng));
  const RVector probs =
      RVector::Constant(static_cast<Index>(count), 1.0 / static_cast<double>(count));
  return random_unitary_channel(probs, unitaries);
}

/// V_i = |phi_i><chi_i| with {chi_i} an orthonormal basis. Completeness is
/// exact and every trajectory is pure after a single step.
inline KrausChannel rank_one_channel(Index d, std::uint64_t seed) {
  if (d < 2) throw ParamOutOfRange("rank_one_channel needs d >= 2");
  Rng rng(seed);
  const CMatrix chi = haar_unitary(d, rng);
  std::vector<CMatrix> ops;
  ops.reserve(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    const CVector phi = random_unit_vector(d, rng);
    ops.push_back(phi * chi.col(i).adjoint());
  }
  return KrausChannel(std::move(ops));
}

/// Generic validated channel: Ginibre blocks A_i renormalized by
/// S^{-1/2} with S = sum_i A_i^dag A_i, so completeness holds by construction.
inline KrausChannel random_channel(Index d, std::size_t outcomes,
                                   std::uint64_t seed) {
  if (d < 1 || outcomes < 1)
    throw ParamOutOfRange("random_channel needs d >= 1 and >= 1 outcome");
  Rng rng(seed);
  std::vector<CMatrix> blocks;
  blocks.reserve(outcomes);
  CMatrix gram = CMatrix::Zero(d, d);
  for (std::size_t i = 0; i < outcomes; ++i) {
    blocks.push_back(ginibre(d, d, rng));
    gram += blocks.back().adjoint() * blocks.back();
  }
  const CMatrix normalizer = psd_inv_sqrt(gram);
  std::vector<CMatrix> ops;
  ops.reserve(outcomes);
  for (const CMatrix& a : blocks) ops.push_back(a * normalizer);
  return KrausChannel(std::move(ops));
}

}  // namespace qtraj
