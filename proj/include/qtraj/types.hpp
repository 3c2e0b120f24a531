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

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qtraj {

using Real = double;
using Complex = std::complex<Real>;
using Index = Eigen::Index;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CMatrix = DenseMatrix<Complex>;
using CVector = DenseVector<Complex>;
using RMatrix = DenseMatrix<Real>;
using RVector = DenseVector<Real>;

/// Outcome label, as an index into the ordered outcome list of a channel.
using Outcome = int;

/// Absolute tolerances used by validating constructors and numerical guards.
/// One mutable global instance; the defaults are the contract everywhere else.
struct Tolerances {
  double hermitian = 1e-10;        // ||X - X^dag||_F for states
  double trace_one = 1e-10;        // |tr(rho) - 1|
  double psd_floor = 1e-10;        // magnitude of tolerated negative eigenvalues
  double completeness = 1e-9;      // ||sum V_i^dag V_i - I||_F
  double projector = 1e-9;         // idempotence / integer-rank defect
  double spectral_input = 1e-8;    // hermiticity gate for eigensolves
  double radicand_clamp = 1e-12;   // largest tolerated negative radicand
  double darkness = 1e-8;          // Frobenius residual for darkness verdicts
  double rank_svd_rel = 1e-9;      // relative singular-value cutoff for spans
  double prob_drift = 1e-8;        // tolerated drift of the outcome-probability sum
  double prune = 1e-14;            // dead-branch trace threshold in enumerations
  double filter_floor = 1e-14;     // filter normalization below this is degenerate
  double support = 1e-9;           // support-inclusion residual
  double state_too_pure = 1e-9;    // V(rho) below this has no contraction factor
  double supermartingale = 1e-10;  // slack for E[V] <= V checks
};

inline Tolerances& tolerances() {
  static Tolerances t;
  return t;
}

/// Default cap on the number of words enumerated exactly.
inline constexpr std::uint64_t kDefaultWordCap = 1'000'000;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define QTRAJ_DEFINE_ERROR(Name)               \
  class Name : public Error {                  \
   public:                                     \
    using Error::Error;                        \
  }

QTRAJ_DEFINE_ERROR(NotHermitian);
QTRAJ_DEFINE_ERROR(NotPSD);
QTRAJ_DEFINE_ERROR(TraceNotOne);
QTRAJ_DEFINE_ERROR(DimensionMismatch);
QTRAJ_DEFINE_ERROR(CompletenessViolation);
QTRAJ_DEFINE_ERROR(UnknownOutcomeLabel);
QTRAJ_DEFINE_ERROR(NumericalInconsistency);
QTRAJ_DEFINE_ERROR(NotOrthonormal);
QTRAJ_DEFINE_ERROR(AllOutcomesZeroProbability);
QTRAJ_DEFINE_ERROR(NormalizationDrift);
QTRAJ_DEFINE_ERROR(SupportViolation);
QTRAJ_DEFINE_ERROR(FilterDegenerate);
QTRAJ_DEFINE_ERROR(EnumerationTooLarge);
QTRAJ_DEFINE_ERROR(StateTooPure);
QTRAJ_DEFINE_ERROR(ViolationFound);
QTRAJ_DEFINE_ERROR(RankTooSmall);
QTRAJ_DEFINE_ERROR(DimensionNotTwo);
QTRAJ_DEFINE_ERROR(NonPositiveSeries);
QTRAJ_DEFINE_ERROR(ParamOutOfRange);
QTRAJ_DEFINE_ERROR(InvalidProbabilities);
QTRAJ_DEFINE_ERROR(NotUnitary);
QTRAJ_DEFINE_ERROR(DimensionCapExceeded);
QTRAJ_DEFINE_ERROR(ConfigError);

#undef QTRAJ_DEFINE_ERROR

}  // namespace qtraj
