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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <qtraj/core.hpp>
#include <qtraj/darkspace.hpp>
#include <qtraj/parallel.hpp>
#include <qtraj/random.hpp>

namespace qtraj {

// ---------------------------------------------------------------------------
// Pair weights
// ---------------------------------------------------------------------------

/// Nonnegative weights w_{kl} over pairs 1 <= k < l <= d summing to one.
/// The image of the eigenvalue map w_{kl} = 2 p_k p_l / (1 - sum_j p_j^2)
/// lies in this simplex. Note that the optimizer searches that image, not
/// the whole simplex: a general point of the pair simplex (weight split
/// between two disjoint pairs) can push the objective above 1, which no
/// spectrum-induced weight vector can do.
class PairWeights {
 public:
  PairWeights(Index d, RVector flat) : d_(d), w_(std::move(flat)) {
    if (w_.size() != pair_count(d_))
      throw DimensionMismatch("pair-weight vector has the wrong length");
    if (w_.size() == 0) return;  // d < 2: no pairs, nothing to normalize
    double sum = 0.0;
    for (Index i = 0; i < w_.size(); ++i) {
      if (w_(i) < -1e-12)
        throw InvalidProbabilities("negative pair weight " +
                                   std::to_string(w_(i)));
      w_(i) = std::max(w_(i), 0.0);
      sum += w_(i);
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw InvalidProbabilities("pair weights sum to " + std::to_string(sum));
    w_ /= sum;
  }

  static Index pair_count(Index d) { return d * (d - 1) / 2; }

  /// Upper-triangle linearization of (k, l) with k < l.
  static Index pair_index(Index d, Index k, Index l) {
    return k * d - k * (k + 1) / 2 + (l - k - 1);
  }

  static PairWeights uniform(Index d) {
    const Index n = pair_count(d);
    return PairWeights(d, RVector::Constant(n, 1.0 / static_cast<double>(n)));
  }

  static PairWeights vertex(Index d, Index k, Index l) {
    RVector w = RVector::Zero(pair_count(d));
    w(pair_index(d, k, l)) = 1.0;
    return PairWeights(d, std::move(w));
  }

  /// Induced weights of a spectrum p (probability vector). Near-pure spectra
  /// degenerate onto the pair of the two largest eigenvalues.
  static PairWeights from_eigenvalues(const RVector& p) {
    const Index d = p.size();
    const double denom = 1.0 - p.squaredNorm();
    if (denom <= 1e-12) {
      Index top = 0, second = 1;
      if (p(second) > p(top)) std::swap(top, second);
      for (Index i = 2; i < d; ++i) {
        if (p(i) > p(top)) {
          second = top;
          top = i;
        } else if (p(i) > p(second)) {
          second = i;
        }
      }
      return vertex(d, std::min(top, second), std::max(top, second));
    }
    RVector w(pair_count(d));
    for (Index k = 0; k < d; ++k)
      for (Index l = k + 1; l < d; ++l)
        w(pair_index(d, k, l)) = 2.0 * p(k) * p(l) / denom;
    w /= w.sum();
    return PairWeights(d, std::move(w));
  }

  double weight(Index k, Index l) const { return w_(pair_index(d_, k, l)); }
  const RVector& flat() const { return w_; }
  Index dim() const { return d_; }

 private:
  Index d_;
  RVector w_;
};

// ---------------------------------------------------------------------------
// Pair determinants and the variational objective
// ---------------------------------------------------------------------------

/// Clamp for 2x2 compression determinants of PSD operators, which are
/// nonnegative in exact arithmetic. The deadband is symmetric: magnitudes at
/// or below the clamp threshold are numerically indistinguishable from zero,
/// and collapsing them prevents the square root from amplifying rounding
/// noise into spurious contributions (a rank-one channel must score exactly
/// zero, not sqrt(machine epsilon)).
inline double clamp_pair_determinant(double x) {
  return x > tolerances().radicand_clamp ? x : 0.0;
}

/// det of M restricted to span(psi_k, psi_l):
/// M^{kk} M^{ll} - |M^{kl}|^2 with M^{ab} = <psi_a| M |psi_b>.
inline double pair_determinant(const CMatrix& m, const CVector& psi_k,
                               const CVector& psi_l) {
  if (m.rows() != m.cols() || psi_k.size() != m.rows() ||
      psi_l.size() != m.rows())
    throw DimensionMismatch("pair_determinant dimension mismatch");
  const double tol = tolerances().spectral_input;
  if (std::abs(psi_k.norm() - 1.0) > tol || std::abs(psi_l.norm() - 1.0) > tol ||
      std::abs(psi_k.dot(psi_l)) > tol)
    throw NotOrthonormal("pair vectors are not orthonormal");
  const CVector mk = m * psi_k;
  const CVector ml = m * psi_l;
  const double mkk = psi_k.dot(mk).real();
  const double mll = psi_l.dot(ml).real();
  const Complex mkl = psi_k.dot(ml);
  return clamp_pair_determinant(mkk * mll - std::norm(mkl));
}

namespace detail {

/// Pair determinants of the compression basis^dag M basis, packed k < l.
inline void compression_pair_determinants(const CMatrix& m,
                                          const CMatrix& basis, RVector& out) {
  const Index d = basis.cols();
  const CMatrix c = basis.adjoint() * (m * basis);
  Index idx = 0;
  for (Index k = 0; k < d; ++k)
    for (Index l = k + 1; l < d; ++l, ++idx)
      out(idx) = clamp_pair_determinant(c(k, k).real() * c(l, l).real() -
                                        std::norm(c(k, l)));
}

/// sum_I sqrt(<w, D_I>) over precomputed moments.
inline double weighted_objective(const std::vector<CMatrix>& moments,
                                 const RVector& w, const CMatrix& basis) {
  RVector dets(w.size());
  double total = 0.0;
  for (const CMatrix& m : moments) {
    compression_pair_determinants(m, basis, dets);
    total += std::sqrt(std::max(0.0, w.dot(dets)));
  }
  return total;
}

inline std::vector<CMatrix> collect_moments(const KrausChannel& ch, int p,
                                            std::uint64_t cap) {
  word_space_size(ch.outcome_count(), p, cap);
  std::vector<CMatrix> moments;
  for_each_word(
      ch, p,
      [&](const MeasurementRecord&, const CMatrix& v) {
        moments.push_back(hermitian_part(v.adjoint() * v));
      },
      tolerances().prune);
  return moments;
}

}  // namespace detail

/// The p-step objective sum_{I in O^p} sqrt(sum_{k<l} w_{kl} det(M_I|kl))
/// at an explicit weight/basis point. Bounded by 1 up to rounding.
inline double rate_objective(const KrausChannel& ch, int p,
                             const PairWeights& w, const CMatrix& basis,
                             std::uint64_t cap = kDefaultWordCap) {
  if (w.dim() != ch.dim())
    throw DimensionMismatch("weights built for a different dimension");
  if (basis.rows() != ch.dim() || basis.cols() != ch.dim())
    throw DimensionMismatch("basis must be d x d");
  const double gram_defect = frobenius_distance(
      basis.adjoint() * basis, CMatrix::Identity(ch.dim(), ch.dim()));
  if (gram_defect > tolerances().spectral_input)
    throw NotOrthonormal("basis gram defect " + std::to_string(gram_defect));
  const std::vector<CMatrix> moments = detail::collect_moments(ch, p, cap);
  return detail::weighted_objective(moments, w.flat(), basis);
}

// ---------------------------------------------------------------------------
// Rate optimization
// ---------------------------------------------------------------------------

struct RateOptions {
  int restarts = 32;
  int evals_per_restart = 2000;
  std::uint64_t seed = 1;
  std::uint64_t cap_words = kDefaultWordCap;
  unsigned workers = 0;
};

/// Best-found value of the variational objective and the induced rate.
/// lambda_hat is a lower bound on the true supremum, so gamma_hat is an
/// upper estimate of the certified rate; for d = 2 the objective does not
/// depend on the weights or the basis and the value is exact.
struct RateEstimate {
  int p = 0;
  double lambda_hat = 0.0;
  double gamma_hat = 0.0;  // -ln(lambda_hat); +inf when lambda_hat == 0
  PairWeights weights;
  CMatrix basis;
  int restarts = 0;
  int best_restart = 0;
  std::uint64_t objective_evals = 0;
  std::vector<double> restart_best;
};

namespace detail {

struct RestartResult {
  double value = 0.0;
  RVector spectrum;  // probability vector p inducing the weights
  CMatrix basis;
  std::uint64_t evals = 0;
};

inline RVector softmax(const RVector& logits) {
  const double shift = logits.maxCoeff();
  RVector w = (logits.array() - shift).exp();
  return w / w.sum();
}

inline RVector induced_weights(const RVector& spectrum) {
  return PairWeights::from_eigenvalues(spectrum).flat();
}

/// Local ascent from one seed. Weights are always the image of a spectrum
/// p on the probability simplex, so every visited point obeys the
/// Cauchy-Schwarz bound; p and the unitary basis are hill-climbed in
/// alternation with adaptive step sizes.
inline RestartResult refine_restart(const std::vector<CMatrix>& moments,
                                    Index d, RVector spectrum, CMatrix basis,
                                    int budget, Rng& rng) {
  RestartResult result;
  result.value =
      weighted_objective(moments, induced_weights(spectrum), basis);
  result.spectrum = spectrum;
  result.basis = basis;
  result.evals = 1;

  auto note = [&](double value, const RVector& pp, const CMatrix& bb) {
    if (value > result.value) {
      result.value = value;
      result.spectrum = pp;
      result.basis = bb;
    }
  };

  // Floor the working spectrum so logit perturbations can reach everywhere.
  RVector p = spectrum.cwiseMax(1e-15);
  p /= p.sum();
  double current = weighted_objective(moments, induced_weights(p), basis);
  ++result.evals;
  note(current, p, basis);

  const auto budget_left = [&]() {
    return result.evals < static_cast<std::uint64_t>(budget);
  };

  bool progressing = true;
  while (progressing && budget_left()) {
    progressing = false;

    if (d > 2) {  // for a qubit the weights are the single pair
      double sigma = 0.5;
      int stall = 0;
      for (int t = 0; t < 40 && budget_left() && sigma > 1e-8; ++t) {
        RVector logits(d);
        for (Index i = 0; i < d; ++i)
          logits(i) = std::log(p(i)) + sigma * rng.gaussian();
        const RVector trial = softmax(logits);
        const double value =
            weighted_objective(moments, induced_weights(trial), basis);
        ++result.evals;
        if (value > current + 1e-15) {
          p = trial;
          current = value;
          note(current, p, basis);
          sigma *= 1.2;
          stall = 0;
          progressing = true;
        } else if (++stall >= 6) {
          sigma *= 0.65;
          stall = 0;
        }
      }
    }

    const RVector w = induced_weights(p);
    double sigma = 0.2;
    int stall = 0;
    for (int t = 0; t < 60 && budget_left() && sigma > 1e-10; ++t) {
      const CMatrix trial_basis =
          orthonormalize(basis + sigma * ginibre(d, d, rng));
      const double value = weighted_objective(moments, w, trial_basis);
      ++result.evals;
      if (value > current + 1e-15) {
        basis = trial_basis;
        current = value;
        note(current, p, basis);
        sigma *= 1.2;
        stall = 0;
        progressing = true;
      } else if (++stall >= 8) {
        sigma *= 0.6;
        stall = 0;
      }
    }
  }
  return result;
}

/// Completes a d x r frame to a full orthonormal basis whose leading columns
/// span the same subspace.
inline CMatrix complete_frame(const CMatrix& frame, Rng& rng) {
  const Index d = frame.rows();
  CMatrix stacked(d, d);
  stacked.leftCols(frame.cols()) = frame;
  stacked.rightCols(d - frame.cols()) = ginibre(d, d - frame.cols(), rng);
  return orthonormalize(stacked);
}

}  // namespace detail

/// Multi-start maximization of the p-step objective over spectrum-induced
/// pair weights and orthonormal bases. Seeds: identity, bases adapted to
/// dark-search candidates with the weight mass on the adapted pair,
/// eigenbases of random mixed states with their induced weights, and
/// Haar-random points. Returns the best point found (a lower bound on the
/// supremum, so the reported rate is an upper estimate).
inline RateEstimate optimize_rate(const KrausChannel& ch, int p,
                                  const RateOptions& options = {}) {
  const Index d = ch.dim();
  if (d < 2) {
    return RateEstimate{p,
                        0.0,
                        std::numeric_limits<double>::infinity(),
                        PairWeights(1, RVector::Zero(0)),
                        CMatrix::Identity(1, 1),
                        0,
                        0,
                        0,
                        {}};
  }
  const std::vector<CMatrix> moments =
      detail::collect_moments(ch, p, options.cap_words);
  const int restarts = std::max(options.restarts, 1);

  // One cheap dark-subspace search; its candidate seeds the adapted restarts.
  std::optional<CMatrix> dark_frame;
  {
    DarkSearchOptions dark;
    dark.restarts = 8;
    dark.iterations = 200;
    dark.seed = derive_seed(options.seed, 0x9E55u);
    dark.cap_words = options.cap_words;
    dark.workers = options.workers;
    try {
      dark_frame = dark_search(ch, 2, p, dark).projector.frame();
    } catch (const Error&) {
      // No candidate; random seeding still applies.
    }
  }

  std::vector<detail::RestartResult> results(restarts);
  parallel_for(restarts, options.workers, [&](std::size_t restart) {
    Rng rng(derive_seed(options.seed, restart));
    RVector spectrum;
    CMatrix basis;
    if (restart == 0) {
      spectrum = RVector::Constant(d, 1.0 / static_cast<double>(d));
      basis = CMatrix::Identity(d, d);
    } else if (restart <= 2 && dark_frame) {
      // Adapted pair: the two leading basis vectors span the candidate
      // subspace, and the spectrum (1/2, 1/2, 0, ...) puts all weight there.
      basis = detail::complete_frame(*dark_frame, rng);
      spectrum = RVector::Zero(d);
      if (restart == 1) {
        spectrum(0) = 0.5;
        spectrum(1) = 0.5;
      } else {
        spectrum.setConstant(1.0 / static_cast<double>(d));
      }
    } else if (restart <= 5) {
      const SpectralDecomposition sd =
          hermitian_eig(random_density_matrix(d, rng));
      basis = sd.basis;
      spectrum = sd.eigenvalues.cwiseMax(0.0);
      spectrum /= spectrum.sum();
    } else {
      basis = haar_unitary(d, rng);
      RVector logits(d);
      for (Index i = 0; i < logits.size(); ++i) logits(i) = 1.5 * rng.gaussian();
      spectrum = detail::softmax(logits);
    }
    results[restart] = detail::refine_restart(moments, d, spectrum, basis,
                                              options.evals_per_restart, rng);
  });

  std::size_t winner = 0;
  std::uint64_t total_evals = 0;
  std::vector<double> restart_best(restarts);
  for (std::size_t r = 0; r < results.size(); ++r) {
    total_evals += results[r].evals;
    restart_best[r] = results[r].value;
    if (results[r].value > results[winner].value) winner = r;
  }

  double lambda = results[winner].value;
  if (lambda > 1.0 + 1e-6)
    throw NumericalInconsistency("objective " + std::to_string(lambda) +
                                 " above 1; Cauchy-Schwarz bound violated");
  if (lambda > 1.0) lambda = 1.0;

  double gamma;
  if (lambda >= 1.0)
    gamma = 0.0;
  else if (lambda > 0.0)
    gamma = -std::log(lambda);
  else
    gamma = std::numeric_limits<double>::infinity();
  RateEstimate estimate{p,
                        lambda,
                        gamma,
                        PairWeights::from_eigenvalues(results[winner].spectrum),
                        results[winner].basis,
                        restarts,
                        static_cast<int>(winner),
                        total_evals,
                        std::move(restart_best)};
  return estimate;
}

// ---------------------------------------------------------------------------
// Qubit closed form
// ---------------------------------------------------------------------------

/// For d = 2 the objective is weight- and basis-independent and equals
/// sum_I |det V_I| = (sum_i |det V_i|)^p, so
/// gamma_p = -p ln(sum_i |det V_i|) exactly.
inline double qubit_rate_closed_form(const KrausChannel& ch, int p) {
  if (ch.dim() != 2)
    throw DimensionNotTwo("closed form requires a qubit channel");
  double sum = 0.0;
  for (std::size_t i = 0; i < ch.outcome_count(); ++i) {
    const CMatrix& v = ch.op(i);
    sum += std::abs(v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0));
  }
  if (sum <= 0.0) return std::numeric_limits<double>::infinity();
  return -static_cast<double>(p) * std::log(sum);
}

// ---------------------------------------------------------------------------
// Empirical rate
// ---------------------------------------------------------------------------

struct EmpiricalRate {
  double rate = 0.0;
  double residual_rms = 0.0;
};

/// Least-squares slope of ln(series) against the step index over
/// [begin, end], negated. The series must be strictly positive there.
inline EmpiricalRate empirical_rate(const RVector& series, int begin, int end) {
  if (begin < 0 || end >= series.size() || end - begin < 1)
    throw ParamOutOfRange("fit window needs at least two points in range");
  const int n = end - begin + 1;
  RVector logs(n);
  for (int i = 0; i < n; ++i) {
    const double value = series(begin + i);
    if (value <= 0.0)
      throw NonPositiveSeries("series value " + std::to_string(value) +
                              " at step " + std::to_string(begin + i));
    logs(i) = std::log(value);
  }
  const double x_mean = begin + 0.5 * (n - 1);
  const double y_mean = logs.mean();
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dx = begin + i - x_mean;
    sxy += dx * (logs(i) - y_mean);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double fit = y_mean + slope * (begin + i - x_mean);
    ss += (logs(i) - fit) * (logs(i) - fit);
  }
  return {-slope, std::sqrt(ss / n)};
}

// ---------------------------------------------------------------------------
// Super-additivity diagnostics
// ---------------------------------------------------------------------------

struct SuperadditivityEntry {
  int p = 0;
  double lambda_hat = 0.0;
  double gamma_hat = 0.0;
};

struct SuperadditivityReport {
  std::vector<SuperadditivityEntry> rows;
  double slack = 0.0;
  bool pass = true;
  double sup_gamma_over_p = 0.0;
  int arg_sup = 0;
  std::vector<std::string> violations;
};

/// Table of gamma_hat_p for p = 1..p_max with the super-additivity check
/// gamma_{p+q} >= gamma_p + gamma_q - slack. The slack absorbs optimizer
/// tolerance; infinite rates propagate consistently.
inline SuperadditivityReport superadditivity_report(
    const KrausChannel& ch, int p_max, double slack = 0.02,
    const RateOptions& options = {}) {
  SuperadditivityReport report;
  report.slack = slack;
  for (int p = 1; p <= p_max; ++p) {
    const RateEstimate est = optimize_rate(ch, p, options);
    report.rows.push_back({p, est.lambda_hat, est.gamma_hat});
  }
  report.sup_gamma_over_p = -std::numeric_limits<double>::infinity();
  for (const auto& row : report.rows) {
    const double ratio = row.gamma_hat / row.p;
    if (ratio > report.sup_gamma_over_p) {
      report.sup_gamma_over_p = ratio;
      report.arg_sup = row.p;
    }
  }
  for (int p = 1; p <= p_max; ++p) {
    for (int q = p; p + q <= p_max; ++q) {
      const double gp = report.rows[p - 1].gamma_hat;
      const double gq = report.rows[q - 1].gamma_hat;
      const double gpq = report.rows[p + q - 1].gamma_hat;
      if (std::isinf(gpq)) continue;
      if (std::isinf(gp) || std::isinf(gq) || gpq < gp + gq - slack) {
        report.pass = false;
        report.violations.push_back(
            "gamma_" + std::to_string(p + q) + " = " + std::to_string(gpq) +
            " < gamma_" + std::to_string(p) + " + gamma_" + std::to_string(q) +
            " - slack");
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Channel classification
// ---------------------------------------------------------------------------

struct VerdictOptions {
  double gamma_threshold = 0.01;
  double candidate_residual = 1e-6;
  RateOptions rates{};
  DarkSearchOptions dark{};
  int max_p = 0;  // 0: up to the moment-space stabilization index
};

/// Classifies a channel: PURIFYING as soon as some gamma_hat_p clears the
/// threshold (that p is the operational p-bar), DARK-CANDIDATE when the
/// search finds a near-dark subspace, INCONCLUSIVE otherwise. Absence of a
/// candidate is never a proof that no dark subspace exists.
inline PurificationReport purification_verdict(const KrausChannel& ch,
                                               const VerdictOptions& options = {}) {
  PurificationReport report;
  report.moments = moment_spaces(ch);
  int span = report.moments.p_bar_span.value_or(
      static_cast<int>(report.moments.dims.size()));
  if (options.max_p > 0) span = std::min(span, options.max_p);

  for (int p = 1; p <= span; ++p) {
    try {
      word_space_size(ch.outcome_count(), p, options.rates.cap_words);
    } catch (const EnumerationTooLarge&) {
      break;
    }
    const RateEstimate est = optimize_rate(ch, p, options.rates);
    report.gamma_head.push_back(est.gamma_hat);
    if (est.gamma_hat > options.gamma_threshold) {
      report.verdict = ChannelClass::Purifying;
      report.operational_p_bar = p;
      return report;
    }
  }

  int search_p = span;
  while (search_p > 1) {
    try {
      detail::words_up_to(ch.outcome_count(), search_p, options.dark.cap_words);
      break;
    } catch (const EnumerationTooLarge&) {
      --search_p;
    }
  }
  DarkSearchOptions dark = options.dark;
  dark.seed = derive_seed(options.rates.seed, 0xDA2Cu);
  report.dark_candidate = dark_search(ch, 2, search_p, dark);
  report.verdict =
      report.dark_candidate->max_residual <= options.candidate_residual
          ? ChannelClass::DarkCandidate
          : ChannelClass::Inconclusive;
  return report;
}

}  // namespace qtraj
