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
#include <string>
#include <vector>

#include <qtraj/core.hpp>
#include <qtraj/parallel.hpp>
#include <qtraj/random.hpp>

namespace qtraj {

// ---------------------------------------------------------------------------
// Moment spaces E_p = span{ M_I : |I| = p }
// ---------------------------------------------------------------------------

/// Dimension growth of the moment spaces. The sequence is non-decreasing,
/// capped at d^2, and once two consecutive dimensions agree it is constant
/// forever; p_bar_span is the first index p with dim E_p == dim E_{p+1}.
struct MomentSpaceReport {
  std::vector<int> dims;             // dim E_1, dim E_2, ...
  std::optional<int> p_bar_span;
  int cap = 0;                       // d^2
};

namespace detail {

inline CVector vectorize(const CMatrix& m) {
  return Eigen::Map<const CVector>(m.data(), m.size());
}

inline CMatrix unvectorize(const CVector& v, Index d) {
  return Eigen::Map<const CMatrix>(v.data(), d, d);
}

/// Orthonormal basis (as columns) of the span of the given vectorized
/// generators, with a relative singular-value cutoff.
inline CMatrix span_basis(const CMatrix& generators) {
  Eigen::BDCSVD<CMatrix> svd(generators, Eigen::ComputeThinU);
  const RVector& sigma = svd.singularValues();
  const double cutoff =
      sigma.size() > 0 ? sigma(0) * tolerances().rank_svd_rel : 0.0;
  Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace detail

/// Iterates E_1 = span{M_i}, E_{p+1} = span{V_i^dag X V_i : X in E_p}. The
/// previous basis is carried into the next generator set, which makes the
/// nesting E_p within E_{p+1} structural rather than a rank-decision artifact.
inline MomentSpaceReport moment_spaces(const KrausChannel& ch, int p_max = 0,
                                       bool stop_at_stabilization = true) {
  const Index d = ch.dim();
  const int cap = static_cast<int>(d * d);
  if (p_max <= 0) p_max = cap;

  MomentSpaceReport report;
  report.cap = cap;

  CMatrix basis;  // d^2 x r, orthonormal columns spanning vec(E_p)
  for (int p = 1; p <= p_max; ++p) {
    std::vector<CVector> generators;
    if (p == 1) {
      for (std::size_t i = 0; i < ch.outcome_count(); ++i)
        generators.push_back(
            detail::vectorize(hermitian_part(ch.op(i).adjoint() * ch.op(i))));
    } else {
      for (Index c = 0; c < basis.cols(); ++c) {
        const CMatrix x = detail::unvectorize(basis.col(c), d);
        for (std::size_t i = 0; i < ch.outcome_count(); ++i)
          generators.push_back(
              detail::vectorize(ch.op(i).adjoint() * x * ch.op(i)));
        generators.push_back(basis.col(c));
      }
    }
    CMatrix stacked(d * d, static_cast<Index>(generators.size()));
    for (std::size_t g = 0; g < generators.size(); ++g)
      stacked.col(static_cast<Index>(g)) = generators[g];
    basis = detail::span_basis(stacked);
    report.dims.push_back(static_cast<int>(basis.cols()));

    const std::size_t k = report.dims.size();
    if (k >= 2 && !report.p_bar_span &&
        report.dims[k - 1] == report.dims[k - 2]) {
      report.p_bar_span = static_cast<int>(k - 1);
      if (stop_at_stabilization) break;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Darkness tests
// ---------------------------------------------------------------------------

/// Result of testing pi M_I pi proportional to pi over all words up to p_max.
/// residual_I = ||pi M_I pi - (tr(pi M_I)/r) pi||_F; the verdict holds at the
/// global darkness tolerance.
struct DarknessVerdict {
  Projector projector;
  double max_residual = 0.0;
  MeasurementRecord worst_word;
  bool dark = false;
  int p_max = 0;
};

namespace detail {

/// Max residual over all words with 1 <= |I| <= p_max, using the r x r
/// compression C_I = F^dag M_I F (Frobenius norms are frame-invariant).
inline void scan_darkness(const KrausChannel& ch, const CMatrix& frame,
                          int p_max, double& max_residual,
                          MeasurementRecord& worst_word) {
  const Index r = frame.cols();
  max_residual = 0.0;
  worst_word.clear();
  for (int length = 1; length <= p_max; ++length) {
    for_each_word(ch, length,
                  [&](const MeasurementRecord& word, const CMatrix& v) {
                    const CMatrix vf = v * frame;
                    const CMatrix compressed = vf.adjoint() * vf;
                    const Complex mu = compressed.trace() / double(r);
                    const double residual =
                        (compressed - mu * CMatrix::Identity(r, r)).norm();
                    if (residual > max_residual) {
                      max_residual = residual;
                      worst_word = word;
                    }
                  });
  }
}

inline std::uint64_t words_up_to(std::size_t outcomes, int p_max,
                                 std::uint64_t cap) {
  std::uint64_t total = 0;
  for (int k = 1; k <= p_max; ++k) {
    total += word_space_size(outcomes, k, cap);
    if (total > cap)
      throw EnumerationTooLarge("words up to length " + std::to_string(p_max) +
                                " exceed the cap");
  }
  return total;
}

}  // namespace detail

/// Darkness test for a given projector. p_max <= 0 defaults to the moment
/// space stabilization index, which is long enough to certify darkness at
/// every length.
inline DarknessVerdict is_dark(const KrausChannel& ch, const Projector& pi,
                               int p_max = 0,
                               std::uint64_t cap = kDefaultWordCap) {
  if (pi.rank() < 2)
    throw RankTooSmall("darkness needs rank >= 2, got " +
                       std::to_string(pi.rank()));
  if (pi.dim() != ch.dim())
    throw DimensionMismatch("projector dimension differs from the channel");
  if (p_max <= 0) {
    const MomentSpaceReport report = moment_spaces(ch);
    p_max = report.p_bar_span.value_or(static_cast<int>(ch.dim() * ch.dim()));
  }
  detail::words_up_to(ch.outcome_count(), p_max, cap);

  DarknessVerdict verdict{pi, 0.0, {}, false, p_max};
  detail::scan_darkness(ch, pi.frame(), p_max, verdict.max_residual,
                        verdict.worst_word);
  verdict.dark = verdict.max_residual <= tolerances().darkness;
  return verdict;
}

// ---------------------------------------------------------------------------
// Heuristic dark-subspace search
// ---------------------------------------------------------------------------

struct DarkSearchOptions {
  int restarts = 16;
  int iterations = 400;
  std::uint64_t seed = 1;
  std::uint64_t cap_words = kDefaultWordCap;
  unsigned workers = 0;
};

namespace detail {

inline CMatrix orthonormalize(const CMatrix& m) {
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.householderQ() * CMatrix::Identity(m.rows(), m.cols());
}

/// Sum of squared residuals over the precomputed moment operators.
inline double darkness_objective(const std::vector<CMatrix>& moments,
                                 const CMatrix& frame) {
  const Index r = frame.cols();
  double total = 0.0;
  for (const CMatrix& m : moments) {
    const CMatrix compressed = frame.adjoint() * m * frame;
    const Complex mu = compressed.trace() / double(r);
    total += (compressed - mu * CMatrix::Identity(r, r)).squaredNorm();
  }
  return total;
}

/// Frame of the top-r eigenvectors of a Hermitian matrix.
inline CMatrix top_eigenframe(const CMatrix& h, Index r) {
  const SpectralDecomposition sd = hermitian_eig(h);
  return sd.basis.rightCols(r);
}

}  // namespace detail

/// Multi-start local descent over rank-r frames, minimizing the summed
/// squared darkness residual. Seeds include eigenframes of the one-letter
/// moments (dark subspaces, when they exist, often sit inside their top
/// eigenspaces) plus Haar-random frames. The best frame found is re-scanned
/// into a verdict; a small residual is a CANDIDATE, never a certificate.
inline DarknessVerdict dark_search(const KrausChannel& ch, Index rank,
                                   int p_max,
                                   const DarkSearchOptions& options = {}) {
  const Index d = ch.dim();
  if (rank < 2 || rank > d)
    throw RankTooSmall("search rank must satisfy 2 <= r <= d");
  detail::words_up_to(ch.outcome_count(), p_max, options.cap_words);

  std::vector<CMatrix> moments;
  for (int length = 1; length <= p_max; ++length)
    for_each_word(
        ch, length,
        [&](const MeasurementRecord&, const CMatrix& v) {
          moments.push_back(hermitian_part(v.adjoint() * v));
        },
        tolerances().prune);

  const int restarts = std::max(options.restarts, 1);
  std::vector<CMatrix> best_frames(restarts);
  std::vector<double> best_values(restarts);

  parallel_for(restarts, options.workers, [&](std::size_t restart) {
    Rng rng(derive_seed(options.seed, restart));
    CMatrix frame;
    const std::size_t n_ops = ch.outcome_count();
    if (restart < n_ops) {
      frame = detail::top_eigenframe(
          hermitian_part(ch.op(restart).adjoint() * ch.op(restart)), rank);
    } else if (restart < 2 * n_ops) {
      // Bottom eigenvectors probe the complementary candidate subspace.
      const SpectralDecomposition sd = hermitian_eig(hermitian_part(
          ch.op(restart - n_ops).adjoint() * ch.op(restart - n_ops)));
      frame = sd.basis.leftCols(rank);
    } else {
      frame = haar_frame(d, rank, rng);
    }

    double value = detail::darkness_objective(moments, frame);
    double sigma = 0.3;
    int stall = 0;
    for (int it = 0; it < options.iterations && sigma > 1e-9; ++it) {
      const CMatrix proposal =
          detail::orthonormalize(frame + sigma * ginibre(d, rank, rng));
      const double trial = detail::darkness_objective(moments, proposal);
      if (trial < value) {
        value = trial;
        frame = proposal;
        sigma *= 1.25;
        stall = 0;
      } else if (++stall >= 12) {
        sigma *= 0.6;
        stall = 0;
      }
      if (value < 1e-26) break;
    }
    best_frames[restart] = frame;
    best_values[restart] = value;
  });

  std::size_t winner = 0;
  for (std::size_t r = 1; r < best_frames.size(); ++r)
    if (best_values[r] < best_values[winner]) winner = r;

  DarknessVerdict verdict{Projector::from_frame(best_frames[winner]), 0.0,
                          {}, false, p_max};
  detail::scan_darkness(ch, best_frames[winner], p_max, verdict.max_residual,
                        verdict.worst_word);
  verdict.dark = verdict.max_residual <= tolerances().darkness;
  return verdict;
}

// ---------------------------------------------------------------------------
// Channel classification (filled in by the rates layer)
// ---------------------------------------------------------------------------

enum class ChannelClass { Purifying, DarkCandidate, Inconclusive };

inline const char* to_string(ChannelClass c) {
  switch (c) {
    case ChannelClass::Purifying:
      return "PURIFYING";
    case ChannelClass::DarkCandidate:
      return "DARK-CANDIDATE";
    case ChannelClass::Inconclusive:
      return "INCONCLUSIVE";
  }
  return "UNKNOWN";
}

/// Combined verdict: moment-space growth, the head of the rate sequence, and
/// the operational reading of p-bar as the first p whose estimated rate
/// clears the threshold. Defined here, computed in rates.hpp.
struct PurificationReport {
  MomentSpaceReport moments;
  std::vector<double> gamma_head;  // gamma_hat for p = 1, 2, ...
  ChannelClass verdict = ChannelClass::Inconclusive;
  std::optional<int> operational_p_bar;
  std::optional<DarknessVerdict> dark_candidate;
};

}  // namespace qtraj
