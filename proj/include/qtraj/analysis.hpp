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
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <qtraj/core.hpp>
#include <qtraj/trajectory.hpp>

namespace qtraj {

// ---------------------------------------------------------------------------
// Exact expectations by word enumeration
// ---------------------------------------------------------------------------

struct ExpectationReport {
  int p = 0;
  double value = 0.0;
  std::uint64_t words_enumerated = 0;  // |O|^p before pruning
};

namespace detail {

inline double expected_lyapunov_recurse(const KrausChannel& ch,
                                        const CMatrix& x, int remaining) {
  if (remaining == 0) {
    const double trace = x.trace().real();
    const double radicand = trace * trace - x.squaredNorm();
    return std::sqrt(clamp_radicand(radicand));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < ch.outcome_count(); ++i) {
    const CMatrix& v = ch.op(i);
    const CMatrix next = hermitian_part(v * x * v.adjoint());
    // Dead branch: the traces of a subtree sum to the parent trace.
    if (next.trace().real() <= tolerances().prune) continue;
    total += expected_lyapunov_recurse(ch, next, remaining - 1);
  }
  return total;
}

}  // namespace detail

/// E[V(rho_p) | rho_0 = rho] by exact enumeration:
/// sum over words I of sqrt((tr V_I rho V_I^dag)^2 - tr((V_I rho V_I^dag)^2)).
/// Branches whose unnormalized trace falls at or below the prune threshold
/// contribute nothing and are skipped.
inline double exact_expected_lyapunov(const KrausChannel& ch,
                                      const DensityMatrix& rho, int p,
                                      std::uint64_t cap = kDefaultWordCap) {
  word_space_size(ch.outcome_count(), p, cap);
  return detail::expected_lyapunov_recurse(ch, rho.matrix(), p);
}

inline ExpectationReport expected_lyapunov_report(
    const KrausChannel& ch, const DensityMatrix& rho, int p,
    std::uint64_t cap = kDefaultWordCap) {
  ExpectationReport report;
  report.p = p;
  report.words_enumerated = word_space_size(ch.outcome_count(), p, cap);
  report.value = exact_expected_lyapunov(ch, rho, p, cap);
  return report;
}

/// Contraction factor lambda_p(rho) = E[V(rho_p) | rho_0 = rho] / V(rho).
inline double lambda_of_state(const KrausChannel& ch, const DensityMatrix& rho,
                              int p, std::uint64_t cap = kDefaultWordCap) {
  const double v = lyapunov(rho);
  if (v <= tolerances().state_too_pure)
    throw StateTooPure("V(rho) = " + std::to_string(v));
  return exact_expected_lyapunov(ch, rho, p, cap) / v;
}

// ---------------------------------------------------------------------------
// Per-word audit
// ---------------------------------------------------------------------------

/// One enumerated word with its probability tr(V_I rho V_I^dag) and its
/// contribution sqrt((tr X)^2 - tr(X^2)) to the exact expectation.
struct WordContribution {
  MeasurementRecord word;
  double probability = 0.0;
  double contribution = 0.0;
};

/// Full per-word breakdown of exact_expected_lyapunov at small p. Pruned
/// (zero-probability) words are included with zero entries so the table
/// always has |O|^p rows.
inline std::vector<WordContribution> expectation_audit(
    const KrausChannel& ch, const DensityMatrix& rho, int p,
    std::uint64_t cap = kDefaultWordCap) {
  word_space_size(ch.outcome_count(), p, cap);
  std::vector<WordContribution> rows;
  for_each_word(ch, p, [&](const MeasurementRecord& word, const CMatrix& v) {
    const CMatrix x = hermitian_part(v * rho.matrix() * v.adjoint());
    const double trace = x.trace().real();
    const double radicand = trace * trace - x.squaredNorm();
    rows.push_back({word, std::max(trace, 0.0),
                    std::sqrt(clamp_radicand(radicand))});
  });
  return rows;
}

/// CSV text for the audit table: word,probability,contribution. Words are
/// printed as dot-separated outcome indices ("" for the empty word).
inline std::string audit_csv(const std::vector<WordContribution>& rows) {
  std::string text = "word,probability,contribution\n";
  char buffer[64];
  for (const WordContribution& row : rows) {
    std::string word;
    for (std::size_t i = 0; i < row.word.size(); ++i) {
      if (i) word += '.';
      word += std::to_string(row.word[i]);
    }
    std::snprintf(buffer, sizeof(buffer), ",%.17g,%.17g\n", row.probability,
                  row.contribution);
    text += word + buffer;
  }
  return text;
}

// ---------------------------------------------------------------------------
// Supermartingale verification
// ---------------------------------------------------------------------------

struct SupermartingaleReport {
  double worst_margin = -1.0;  // max over checks of E[V] - V(rho)
  std::size_t worst_state = 0;
  int worst_p = 0;
  std::size_t checks = 0;
};

/// Asserts E[V(rho_p) | rho] <= V(rho) + slack for every state and every p.
/// Throws ViolationFound with the witness on failure; otherwise returns the
/// worst margin seen.
inline SupermartingaleReport supermartingale_check(
    const KrausChannel& ch, const std::vector<DensityMatrix>& states,
    const std::vector<int>& p_list, std::uint64_t cap = kDefaultWordCap) {
  SupermartingaleReport report;
  report.worst_margin = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < states.size(); ++s) {
    const double v = lyapunov(states[s]);
    for (int p : p_list) {
      const double expected = exact_expected_lyapunov(ch, states[s], p, cap);
      const double margin = expected - v;
      ++report.checks;
      if (margin > report.worst_margin) {
        report.worst_margin = margin;
        report.worst_state = s;
        report.worst_p = p;
      }
      if (margin > tolerances().supermartingale)
        throw ViolationFound("E[V] exceeds V by " + std::to_string(margin) +
                             " at state " + std::to_string(s) + ", p = " +
                             std::to_string(p));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Monte Carlo cross-validation
// ---------------------------------------------------------------------------

struct MonteCarloComparison {
  double exact = 0.0;
  double mc_mean = 0.0;
  double mc_se = 0.0;
  bool pass = false;
};

/// |MC mean of V(rho_n) - exact enumeration| <= 3 standard errors. With zero
/// error (n = 0 or a deterministic channel) the comparison is exact.
inline MonteCarloComparison monte_carlo_vs_exact(
    const KrausChannel& ch, const DensityMatrix& rho0, int n, std::size_t m,
    std::uint64_t seed, std::uint64_t cap = kDefaultWordCap,
    unsigned workers = 0) {
  MonteCarloComparison cmp;
  cmp.exact = exact_expected_lyapunov(ch, rho0, n, cap);
  const TrajectoryEnsemble ens =
      ensemble(ch, rho0, std::nullopt, n, m, seed, workers);
  cmp.mc_mean = ens.mean_lyapunov(n);
  cmp.mc_se = ens.se_lyapunov(n);
  const double gap = std::abs(cmp.mc_mean - cmp.exact);
  cmp.pass = gap <= std::max(3.0 * cmp.mc_se, 1e-12);
  return cmp;
}

// ---------------------------------------------------------------------------
// key=value report rendering
// ---------------------------------------------------------------------------

inline std::string to_key_value(const SupermartingaleReport& r) {
  std::string text;
  text += "worst_margin=" + std::to_string(r.worst_margin) + "\n";
  text += "worst_state=" + std::to_string(r.worst_state) + "\n";
  text += "worst_p=" + std::to_string(r.worst_p) + "\n";
  text += "checks=" + std::to_string(r.checks) + "\n";
  return text;
}

inline std::string to_key_value(const MonteCarloComparison& r) {
  std::string text;
  text += "exact=" + std::to_string(r.exact) + "\n";
  text += "mc_mean=" + std::to_string(r.mc_mean) + "\n";
  text += "mc_se=" + std::to_string(r.mc_se) + "\n";
  text += std::string("pass=") + (r.pass ? "true" : "false") + "\n";
  return text;
}

}  // namespace qtraj
