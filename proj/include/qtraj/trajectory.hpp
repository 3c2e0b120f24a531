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

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <qtraj/core.hpp>
#include <qtraj/parallel.hpp>
#include <qtraj/random.hpp>

namespace qtraj {

// ---------------------------------------------------------------------------
// Single steps
// ---------------------------------------------------------------------------

/// Outcome probabilities p_i = tr(V_i rho V_i^dag), renormalized to sum to
/// one. Drift of the sum beyond prob_drift aborts instead of being hidden.
inline RVector outcome_probabilities(const KrausChannel& ch,
                                     const DensityMatrix& rho) {
  const std::size_t n = ch.outcome_count();
  RVector probs(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const CMatrix vr = ch.op(i) * rho.matrix();
    probs(static_cast<Index>(i)) =
        std::max(0.0, vr.cwiseProduct(ch.op(i).conjugate()).sum().real());
  }
  const double sum = probs.sum();
  if (sum <= 1e-12)
    throw AllOutcomesZeroProbability("all outcome probabilities vanish");
  if (std::abs(sum - 1.0) > tolerances().prob_drift)
    throw NormalizationDrift("probability sum " + std::to_string(sum));
  return probs / sum;
}

struct StepResult {
  Outcome outcome;
  DensityMatrix state;
};

namespace detail {

/// Inverse-CDF selection with a single uniform draw: the smallest index whose
/// cumulative sum strictly exceeds u. Zero-probability outcomes can never be
/// the minimal index; rounding at the far end falls back to the last outcome
/// with positive probability.
inline Outcome pick_outcome(const RVector& probs, double u) {
  double cumulative = 0.0;
  Outcome last_positive = -1;
  for (Index i = 0; i < probs.size(); ++i) {
    if (probs(i) > 0.0) last_positive = static_cast<Outcome>(i);
    cumulative += probs(i);
    if (u < cumulative && probs(i) > 0.0) return static_cast<Outcome>(i);
  }
  return last_positive;
}

inline DensityMatrix conditioned_state(const KrausChannel& ch, Outcome i,
                                       const DensityMatrix& rho) {
  const CMatrix& v = ch.op(static_cast<std::size_t>(i));
  const CMatrix numerator = v * rho.matrix() * v.adjoint();
  const double trace = numerator.trace().real();
  return DensityMatrix(numerator / trace);
}

}  // namespace detail

/// One measurement step driven by a uniform draw u in [0, 1).
inline StepResult step(const KrausChannel& ch, const DensityMatrix& rho,
                       double u) {
  const RVector probs = outcome_probabilities(ch, rho);
  const Outcome i = detail::pick_outcome(probs, u);
  return {i, detail::conditioned_state(ch, i, rho)};
}

// ---------------------------------------------------------------------------
// Whole trajectories
// ---------------------------------------------------------------------------

struct TrajectorySample {
  MeasurementRecord record;
  std::vector<DensityMatrix> states;  // rho_0 ... rho_n
  std::uint64_t seed = 0;
};

/// Deterministic given the seed: one uniform draw per step, nothing else
/// consumes the stream.
inline TrajectorySample sample_trajectory(const KrausChannel& ch,
                                          const DensityMatrix& rho0, int steps,
                                          std::uint64_t seed) {
  TrajectorySample sample;
  sample.seed = seed;
  sample.record.reserve(static_cast<std::size_t>(steps));
  sample.states.reserve(static_cast<std::size_t>(steps) + 1);
  sample.states.push_back(rho0);
  Rng rng(seed);
  for (int k = 0; k < steps; ++k) {
    StepResult next = step(ch, sample.states.back(), rng.uniform());
    sample.record.push_back(next.outcome);
    sample.states.push_back(std::move(next.state));
  }
  return sample;
}

/// Probability of observing the whole record from rho0:
/// tr(V_I rho0 V_I^dag), accumulated without intermediate normalization.
inline double record_probability(const KrausChannel& ch,
                                 const DensityMatrix& rho0,
                                 const MeasurementRecord& record) {
  CMatrix x = rho0.matrix();
  for (Outcome i : record) {
    if (i < 0 || static_cast<std::size_t>(i) >= ch.outcome_count())
      throw UnknownOutcomeLabel("outcome index " + std::to_string(i) +
                                " out of range");
    const CMatrix& v = ch.op(static_cast<std::size_t>(i));
    x = v * x * v.adjoint();
  }
  return std::min(1.0, std::max(0.0, x.trace().real()));
}

// ---------------------------------------------------------------------------
// Paired (true, estimated) trajectories
// ---------------------------------------------------------------------------

struct PairedSample {
  MeasurementRecord record;
  std::vector<DensityMatrix> true_states;
  std::vector<DensityMatrix> filter_states;
  RVector fidelities;  // F(rho_k, rho_hat_k) for k = 0 ... n
  std::uint64_t seed = 0;
};

namespace detail {

inline void require_support_inclusion(const DensityMatrix& rho0,
                                      const DensityMatrix& filter0) {
  const CMatrix complement =
      CMatrix::Identity(filter0.dim(), filter0.dim()) -
      support_projector(filter0.matrix());
  const double residual = (complement * rho0.matrix() * complement).norm();
  if (residual > tolerances().support)
    throw SupportViolation("support-inclusion residual " +
                           std::to_string(residual));
}

}  // namespace detail

/// Record sampled from the law of the TRUE state; both states are updated
/// with the same outcomes. The support condition supp(rho0) within
/// supp(filter0) is enforced at the start; a filter normalization below
/// filter_floor along the path aborts instead of being regularized.
inline PairedSample paired_filter_trajectory(const KrausChannel& ch,
                                             const DensityMatrix& rho0,
                                             const DensityMatrix& filter0,
                                             int steps, std::uint64_t seed) {
  if (rho0.dim() != filter0.dim())
    throw DimensionMismatch("true and filter states differ in dimension");
  detail::require_support_inclusion(rho0, filter0);

  PairedSample sample;
  sample.seed = seed;
  sample.true_states.push_back(rho0);
  sample.filter_states.push_back(filter0);
  sample.fidelities.resize(steps + 1);
  sample.fidelities(0) = fidelity(rho0, filter0);

  Rng rng(seed);
  for (int k = 0; k < steps; ++k) {
    const RVector probs = outcome_probabilities(ch, sample.true_states.back());
    const Outcome i = detail::pick_outcome(probs, rng.uniform());
    sample.record.push_back(i);
    sample.true_states.push_back(
        detail::conditioned_state(ch, i, sample.true_states.back()));

    const CMatrix& v = ch.op(static_cast<std::size_t>(i));
    const CMatrix numerator =
        v * sample.filter_states.back().matrix() * v.adjoint();
    const double norm = numerator.trace().real();
    if (norm < tolerances().filter_floor)
      throw FilterDegenerate("filter normalization " + std::to_string(norm) +
                             " at step " + std::to_string(k + 1));
    sample.filter_states.push_back(DensityMatrix(numerator / norm));
    sample.fidelities(k + 1) =
        fidelity(sample.true_states.back(), sample.filter_states.back());
  }
  return sample;
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

/// Per-step ensemble statistics. Standard errors are sample standard
/// deviation / sqrt(m); a single sample reports zero error. The per-sample
/// Lyapunov values are kept so callers can dump raw trajectories.
struct TrajectoryEnsemble {
  std::size_t samples = 0;
  int steps = 0;
  std::uint64_t base_seed = 0;
  bool has_filter = false;
  RVector mean_lyapunov, se_lyapunov;
  RVector mean_purity, se_purity;
  RVector mean_one_minus_fidelity, se_one_minus_fidelity;
  RMatrix sample_lyapunov;  // samples x (steps + 1)
};

namespace detail {

inline void column_stats(const RMatrix& values, RVector& mean, RVector& se) {
  const Index m = values.rows();
  mean = values.colwise().mean();
  se.resize(values.cols());
  if (m < 2) {
    se.setZero();
    return;
  }
  for (Index c = 0; c < values.cols(); ++c) {
    const double variance =
        (values.col(c).array() - mean(c)).square().sum() / double(m - 1);
    se(c) = std::sqrt(variance / double(m));
  }
}

}  // namespace detail

/// Samples m trajectories with per-sample seeds derived from base_seed by
/// index. Members are embarrassingly parallel; the reduction runs in index
/// order so results are identical for any worker count.
inline TrajectoryEnsemble ensemble(const KrausChannel& ch,
                                   const DensityMatrix& rho0,
                                   const std::optional<DensityMatrix>& filter0,
                                   int steps, std::size_t samples,
                                   std::uint64_t base_seed,
                                   unsigned workers = 0) {
  if (samples < 1) throw ParamOutOfRange("ensemble needs m >= 1");
  if (steps < 0) throw ParamOutOfRange("ensemble needs n >= 0");
  if (filter0) detail::require_support_inclusion(rho0, *filter0);

  TrajectoryEnsemble out;
  out.samples = samples;
  out.steps = steps;
  out.base_seed = base_seed;
  out.has_filter = filter0.has_value();

  const Index cols = steps + 1;
  RMatrix lyap(samples, cols), pur(samples, cols);
  RMatrix omf = out.has_filter ? RMatrix(samples, cols) : RMatrix(0, 0);

  parallel_for(samples, workers, [&](std::size_t s) {
    Rng rng(derive_seed(base_seed, s));
    DensityMatrix state = rho0;
    std::optional<DensityMatrix> filter = filter0;
    for (int k = 0; k <= steps; ++k) {
      lyap(static_cast<Index>(s), k) = lyapunov(state);
      pur(static_cast<Index>(s), k) = purity(state);
      if (filter)
        omf(static_cast<Index>(s), k) =
            std::max(0.0, 1.0 - fidelity(state, *filter));
      if (k == steps) break;
      const RVector probs = outcome_probabilities(ch, state);
      const Outcome i = detail::pick_outcome(probs, rng.uniform());
      state = detail::conditioned_state(ch, i, state);
      if (filter) {
        const CMatrix& v = ch.op(static_cast<std::size_t>(i));
        const CMatrix numerator = v * filter->matrix() * v.adjoint();
        const double norm = numerator.trace().real();
        if (norm < tolerances().filter_floor)
          throw FilterDegenerate("filter normalization " +
                                 std::to_string(norm));
        filter = DensityMatrix(numerator / norm);
      }
    }
  });

  detail::column_stats(lyap, out.mean_lyapunov, out.se_lyapunov);
  detail::column_stats(pur, out.mean_purity, out.se_purity);
  if (out.has_filter)
    detail::column_stats(omf, out.mean_one_minus_fidelity,
                         out.se_one_minus_fidelity);
  out.sample_lyapunov = std::move(lyap);
  return out;
}

}  // namespace qtraj
