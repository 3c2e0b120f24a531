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

#include <qtraj/types.hpp>

namespace qtraj {

/// One splitmix64 step; advances the state and returns the next output.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derives the seed of stream `index` from `base`. Used for per-trajectory
/// and per-restart streams so parallel workers never share generator state.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t state = base + 0x9E3779B97F4A7C15ull * (index + 1);
  return splitmix64_next(state);
}

/// Deterministic uniform/gaussian source built on splitmix64. The output
/// sequence depends only on the seed, not on the platform or the standard
/// library, which keeps sampled records reproducible byte-for-byte.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64_next(state_); }

  /// Uniform draw in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal draw (Box-Muller, cached spare).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Matrix with i.i.d. standard complex gaussian entries.
inline CMatrix ginibre(Index rows, Index cols, Rng& rng) {
  CMatrix g(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r)
      g(r, c) = Complex(rng.gaussian(), rng.gaussian());
  return g;
}

/// Orthonormal d x r frame, Haar-distributed on the Stiefel manifold.
inline CMatrix haar_frame(Index d, Index r, Rng& rng) {
  const CMatrix g = ginibre(d, r, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, r);
  // Fix the phase freedom of QR so the distribution is Haar.
  const CMatrix rmat = q.adjoint() * g;
  for (Index j = 0; j < r; ++j) {
    const Complex diag = rmat(j, j);
    const double mag = std::abs(diag);
    if (mag > 0.0) q.col(j) *= diag / mag;
  }
  return q;
}

inline CMatrix haar_unitary(Index d, Rng& rng) { return haar_frame(d, d, rng); }

inline CVector random_unit_vector(Index d, Rng& rng) {
  CVector v(d);
  for (Index i = 0; i < d; ++i) v(i) = Complex(rng.gaussian(), rng.gaussian());
  const double norm = v.norm();
  if (norm == 0.0) return random_unit_vector(d, rng);
  return v / norm;
}

/// Full-rank mixed state G G^dag / tr(G G^dag) with Ginibre G.
inline CMatrix random_density_matrix(Index d, Rng& rng) {
  const CMatrix g = ginibre(d, d, rng);
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = (0.5 * (rho + rho.adjoint())).eval();
  return rho;
}

}  // namespace qtraj
