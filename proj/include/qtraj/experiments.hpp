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
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <qtraj/analysis.hpp>
#include <qtraj/darkspace.hpp>
#include <qtraj/io.hpp>
#include <qtraj/models.hpp>
#include <qtraj/rates.hpp>
#include <qtraj/trajectory.hpp>

namespace qtraj {

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct StateSpec {
  enum class Kind { MaximallyMixed, PureIndex, File };
  Kind kind = Kind::MaximallyMixed;
  Index index = 0;
  std::filesystem::path path;
};

struct SweepSpec {
  std::string param1;
  std::string param2;
  std::vector<double> values1;
  std::vector<double> values2;
  int p = 2;
  int fit_begin = 1;
  int fit_end = 0;  // 0: config steps
};

/// One experiment = one config document. Flags may override seed, out_dir,
/// threads and cap_words; out_dir and threads never enter the config hash,
/// so reruns into different directories produce identical artifacts.
struct ExperimentConfig {
  json model;
  StateSpec initial_state{};
  std::optional<StateSpec> filter_state;
  int steps = 1;
  std::size_t samples = 1;
  std::uint64_t seed = 1;
  std::vector<int> p_list;
  std::filesystem::path out_dir = "out";
  unsigned threads = 0;
  std::uint64_t cap_words = kDefaultWordCap;
  int restarts = 32;
  int evals_per_restart = 2000;
  std::optional<SweepSpec> sweep;
};

namespace detail {

inline StateSpec state_spec_from_json(const json& j,
                                      const std::filesystem::path& base_dir) {
  StateSpec spec;
  if (j.is_string()) {
    if (j.get<std::string>() != "maximally_mixed")
      throw ConfigError("unknown state spec '" + j.get<std::string>() + "'");
    spec.kind = StateSpec::Kind::MaximallyMixed;
  } else if (j.is_object() && j.contains("pure")) {
    spec.kind = StateSpec::Kind::PureIndex;
    spec.index = j.at("pure").get<Index>();
  } else if (j.is_object() && j.contains("file")) {
    spec.kind = StateSpec::Kind::File;
    std::filesystem::path p = j.at("file").get<std::string>();
    spec.path = p.is_absolute() ? p : base_dir / p;
  } else {
    throw ConfigError("state spec must be \"maximally_mixed\", {\"pure\": k} "
                      "or {\"file\": path}");
  }
  return spec;
}

inline json state_spec_to_json(const StateSpec& spec) {
  switch (spec.kind) {
    case StateSpec::Kind::MaximallyMixed:
      return json("maximally_mixed");
    case StateSpec::Kind::PureIndex:
      return json{{"pure", spec.index}};
    case StateSpec::Kind::File:
      return json{{"file", spec.path.string()}};
  }
  throw ConfigError("corrupt state spec");
}

}  // namespace detail

inline ExperimentConfig config_from_json(
    const json& doc, const std::filesystem::path& base_dir = ".") {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  try {
    if (!doc.contains("model"))
      throw ConfigError("config needs a 'model' block");
    cfg.model = doc.at("model");
    if (cfg.model.contains("path")) {
      std::filesystem::path p = cfg.model.at("path").get<std::string>();
      if (!p.is_absolute()) cfg.model["path"] = (base_dir / p).string();
    }
    if (doc.contains("initial_state"))
      cfg.initial_state =
          detail::state_spec_from_json(doc.at("initial_state"), base_dir);
    if (doc.contains("filter_state"))
      cfg.filter_state =
          detail::state_spec_from_json(doc.at("filter_state"), base_dir);
    if (doc.contains("steps")) cfg.steps = doc.at("steps").get<int>();
    if (doc.contains("samples"))
      cfg.samples = doc.at("samples").get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("p_list"))
      cfg.p_list = doc.at("p_list").get<std::vector<int>>();
    if (doc.contains("out_dir"))
      cfg.out_dir = doc.at("out_dir").get<std::string>();
    if (doc.contains("threads")) cfg.threads = doc.at("threads").get<unsigned>();
    if (doc.contains("cap_words"))
      cfg.cap_words = doc.at("cap_words").get<std::uint64_t>();
    if (doc.contains("restarts")) cfg.restarts = doc.at("restarts").get<int>();
    if (doc.contains("evals_per_restart"))
      cfg.evals_per_restart = doc.at("evals_per_restart").get<int>();
    if (doc.contains("sweep")) {
      const json& s = doc.at("sweep");
      SweepSpec sweep;
      sweep.param1 = s.at("param1").get<std::string>();
      sweep.param2 = s.at("param2").get<std::string>();
      sweep.values1 = s.at("values1").get<std::vector<double>>();
      sweep.values2 = s.at("values2").get<std::vector<double>>();
      if (s.contains("p")) sweep.p = s.at("p").get<int>();
      if (s.contains("fit_begin")) sweep.fit_begin = s.at("fit_begin").get<int>();
      if (s.contains("fit_end")) sweep.fit_end = s.at("fit_end").get<int>();
      cfg.sweep = std::move(sweep);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (cfg.steps < 0) throw ConfigError("steps must be >= 0");
  if (cfg.samples < 1) throw ConfigError("samples must be >= 1");
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return config_from_json(doc, path.has_parent_path()
                                   ? path.parent_path()
                                   : std::filesystem::path("."));
}

/// Canonical serialization of the semantic payload; out_dir and threads are
/// excluded on purpose so they cannot change the artifact bytes.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json doc;
  doc["model"] = cfg.model;
  doc["initial_state"] = detail::state_spec_to_json(cfg.initial_state);
  if (cfg.filter_state)
    doc["filter_state"] = detail::state_spec_to_json(*cfg.filter_state);
  doc["steps"] = cfg.steps;
  doc["samples"] = cfg.samples;
  doc["seed"] = cfg.seed;
  doc["p_list"] = cfg.p_list;
  doc["cap_words"] = cfg.cap_words;
  doc["restarts"] = cfg.restarts;
  doc["evals_per_restart"] = cfg.evals_per_restart;
  if (cfg.sweep) {
    doc["sweep"] = {{"param1", cfg.sweep->param1},
                    {"param2", cfg.sweep->param2},
                    {"values1", cfg.sweep->values1},
                    {"values2", cfg.sweep->values2},
                    {"p", cfg.sweep->p},
                    {"fit_begin", cfg.sweep->fit_begin},
                    {"fit_end", cfg.sweep->fit_end}};
  }
  return fnv1a64(doc.dump());
}

// ---------------------------------------------------------------------------
// Model and state construction
// ---------------------------------------------------------------------------

inline KrausChannel build_model(const json& spec) {
  try {
    if (!spec.is_object() || !spec.contains("type"))
      throw ConfigError("model spec needs a 'type'");
    const std::string type = spec.at("type").get<std::string>();
    if (type == "spin_chain") {
      SpinChainParams params;
      if (spec.contains("n_qubits")) params.n_qubits = spec.at("n_qubits").get<int>();
      if (spec.contains("J")) params.coupling = spec.at("J").get<double>();
      if (spec.contains("tau")) params.tau = spec.at("tau").get<double>();
      if (spec.contains("Bx")) params.field_x = spec.at("Bx").get<double>();
      if (spec.contains("Bz")) params.field_z = spec.at("Bz").get<double>();
      if (spec.contains("qubit_cap")) params.qubit_cap = spec.at("qubit_cap").get<int>();
      return spin_chain_channel(params);
    }
    if (type == "amplitude_damping")
      return amplitude_damping(spec.at("a").get<double>());
    if (type == "random_unitary") {
      const Index dim = spec.at("dim").get<Index>();
      const std::size_t count =
          spec.contains("count") ? spec.at("count").get<std::size_t>() : 2;
      const std::uint64_t seed =
          spec.contains("seed") ? spec.at("seed").get<std::uint64_t>() : 1;
      if (spec.contains("probs")) {
        const std::vector<double> probs =
            spec.at("probs").get<std::vector<double>>();
        Rng rng(seed);
        std::vector<CMatrix> unitaries;
        for (std::size_t i = 0; i < probs.size(); ++i)
          unitaries.push_back(haar_unitary(dim, rng));
        RVector p(static_cast<Index>(probs.size()));
        for (std::size_t i = 0; i < probs.size(); ++i)
          p(static_cast<Index>(i)) = probs[i];
        return random_unitary_channel(p, unitaries);
      }
      return random_unitary_channel(dim, count, seed);
    }
    if (type == "rank_one") {
      const Index dim = spec.at("dim").get<Index>();
      const std::uint64_t seed =
          spec.contains("seed") ? spec.at("seed").get<std::uint64_t>() : 1;
      return rank_one_channel(dim, seed);
    }
    if (type == "file") return load_channel(spec.at("path").get<std::string>());
    throw ConfigError("unknown model type '" + type + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model spec: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
}

/// Evolution time of the model, for the normalized sweep columns.
inline double model_tau(const json& spec) {
  if (spec.is_object() && spec.value("type", "") == "spin_chain" &&
      spec.contains("tau"))
    return spec.at("tau").get<double>();
  return 1.0;
}

inline DensityMatrix build_state(const StateSpec& spec, Index dim) {
  switch (spec.kind) {
    case StateSpec::Kind::MaximallyMixed:
      return DensityMatrix::maximally_mixed(dim);
    case StateSpec::Kind::PureIndex:
      if (spec.index < 0 || spec.index >= dim)
        throw ConfigError("pure-state index out of range for dim " +
                          std::to_string(dim));
      return DensityMatrix::pure(dim, spec.index);
    case StateSpec::Kind::File: {
      const DensityMatrix rho = load_density(spec.path);
      if (rho.dim() != dim)
        throw ConfigError("state file dimension " + std::to_string(rho.dim()) +
                          " does not match the model dimension " +
                          std::to_string(dim));
      return rho;
    }
  }
  throw ConfigError("corrupt state spec");
}

namespace detail {

inline RateOptions rate_options(const ExperimentConfig& cfg) {
  RateOptions options;
  options.restarts = cfg.restarts;
  options.evals_per_restart = cfg.evals_per_restart;
  options.seed = cfg.seed;
  options.cap_words = cfg.cap_words;
  options.workers = cfg.threads;
  return options;
}

inline double bound_at(double gamma, int step, int p) {
  if (std::isinf(gamma)) return step >= p ? 0.0 : 1.0;
  return std::exp(-gamma * static_cast<double>(step / p));
}

inline std::filesystem::path emit(const ExperimentConfig& cfg,
                                  const std::string& name,
                                  const std::string& content) {
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path path = cfg.out_dir / name;
  write_file_atomic(path, content);
  return path;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

/// Ensemble run; the Lyapunov columns are normalized by V(rho_0) so the
/// mean starts at 1 (pure initial states keep the raw values).
inline std::vector<std::filesystem::path> cmd_simulate(
    const ExperimentConfig& cfg) {
  const KrausChannel ch = build_model(cfg.model);
  const DensityMatrix rho0 = build_state(cfg.initial_state, ch.dim());
  std::optional<DensityMatrix> filter0;
  if (cfg.filter_state) filter0 = build_state(*cfg.filter_state, ch.dim());

  TrajectoryEnsemble ens;
  try {
    ens = ensemble(ch, rho0, filter0, cfg.steps, cfg.samples, cfg.seed,
                   cfg.threads);
  } catch (const SupportViolation& e) {
    throw ConfigError(e.what());
  }

  const double v0 = lyapunov(rho0);
  const double scale = v0 > 0.0 ? 1.0 / v0 : 1.0;
  const std::uint64_t hash = config_hash(cfg);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  CsvBuilder stats(hash, cfg.seed,
                   "step,mean_lyapunov,se_lyapunov,mean_purity,se_purity,"
                   "mean_one_minus_fidelity,se_one_minus_fidelity");
  for (int k = 0; k <= cfg.steps; ++k) {
    stats.row({std::to_string(k), format_double(ens.mean_lyapunov(k) * scale),
               format_double(ens.se_lyapunov(k) * scale),
               format_double(ens.mean_purity(k)),
               format_double(ens.se_purity(k)),
               format_double(ens.has_filter ? ens.mean_one_minus_fidelity(k)
                                            : nan),
               format_double(ens.has_filter ? ens.se_one_minus_fidelity(k)
                                            : nan)});
  }

  CsvBuilder samples(hash, cfg.seed, "sample_id,step,value");
  for (std::size_t s = 0; s < ens.samples; ++s)
    for (int k = 0; k <= cfg.steps; ++k)
      samples.row({std::to_string(s), std::to_string(k),
                   format_double(ens.sample_lyapunov(static_cast<Index>(s), k) *
                                 scale)});

  return {detail::emit(cfg, "ensemble.csv", stats.str()),
          detail::emit(cfg, "samples.csv", samples.str())};
}

/// Rate estimates for every p in the list, plus the induced bound curves
/// exp(-gamma_hat_p * floor(n/p)).
inline std::vector<std::filesystem::path> cmd_rates(
    const ExperimentConfig& cfg) {
  if (cfg.p_list.empty())
    throw ConfigError("rates needs a nonempty p_list");
  const KrausChannel ch = build_model(cfg.model);
  const std::uint64_t hash = config_hash(cfg);

  CsvBuilder rates(hash, cfg.seed,
                   "p,lambda_hat,gamma_hat,restarts,best_restart_index,"
                   "objective_evals");
  CsvBuilder bounds(hash, cfg.seed, "p,step,bound");
  for (int p : cfg.p_list) {
    const RateEstimate est = optimize_rate(ch, p, detail::rate_options(cfg));
    rates.row({std::to_string(p), format_double(est.lambda_hat),
               format_double(est.gamma_hat), std::to_string(est.restarts),
               std::to_string(est.best_restart),
               std::to_string(est.objective_evals)});
    for (int k = 0; k <= cfg.steps; ++k)
      bounds.row({std::to_string(p), std::to_string(k),
                  format_double(detail::bound_at(est.gamma_hat, k, p))});
  }
  return {detail::emit(cfg, "rates.csv", rates.str()),
          detail::emit(cfg, "bounds.csv", bounds.str())};
}

/// Moment-space growth curve plus the purification verdict.
inline std::vector<std::filesystem::path> cmd_darkspace(
    const ExperimentConfig& cfg) {
  const KrausChannel ch = build_model(cfg.model);
  VerdictOptions options;
  options.rates = detail::rate_options(cfg);
  options.dark.seed = cfg.seed;
  options.dark.cap_words = cfg.cap_words;
  options.dark.workers = cfg.threads;
  const PurificationReport report = purification_verdict(ch, options);

  const std::uint64_t hash = config_hash(cfg);
  CsvBuilder moments(hash, cfg.seed, "word_length,dim_Ep");
  for (std::size_t i = 0; i < report.moments.dims.size(); ++i)
    moments.row({std::to_string(i + 1), std::to_string(report.moments.dims[i])});

  std::string verdict = "# config_hash=" + hex64(hash) +
                        " seed=" + std::to_string(cfg.seed) + "\n";
  verdict += std::string("verdict=") + to_string(report.verdict) + "\n";
  verdict += "dim_cap=" + std::to_string(report.moments.cap) + "\n";
  verdict += "p_bar_span=" + (report.moments.p_bar_span
                                  ? std::to_string(*report.moments.p_bar_span)
                                  : std::string("none")) + "\n";
  verdict += "operational_p_bar=" + (report.operational_p_bar
                                         ? std::to_string(*report.operational_p_bar)
                                         : std::string("none")) + "\n";
  for (std::size_t i = 0; i < report.gamma_head.size(); ++i)
    verdict += "gamma_" + std::to_string(i + 1) + "=" +
               format_double(report.gamma_head[i]) + "\n";
  if (report.dark_candidate) {
    verdict += "dark_search_residual=" +
               format_double(report.dark_candidate->max_residual) + "\n";
    verdict += "dark_search_rank=" +
               std::to_string(report.dark_candidate->projector.rank()) + "\n";
  }
  return {detail::emit(cfg, "moments.csv", moments.str()),
          detail::emit(cfg, "verdict.txt", verdict)};
}

/// Paired-filter run against the stability bound
/// C exp(-gamma_hat floor(n/p)) with
/// C = ||rhohat0^{-1/2} rho0 rhohat0^{-1/2}||_inf * V(rhohat0).
inline std::vector<std::filesystem::path> cmd_stability(
    const ExperimentConfig& cfg) {
  if (!cfg.filter_state)
    throw ConfigError("stability needs a filter_state");
  if (cfg.p_list.empty())
    throw ConfigError("stability needs a nonempty p_list");
  const KrausChannel ch = build_model(cfg.model);
  const DensityMatrix rho0 = build_state(cfg.initial_state, ch.dim());
  const DensityMatrix filter0 = build_state(*cfg.filter_state, ch.dim());

  const CMatrix inv_root = psd_inv_sqrt(filter0.matrix());
  const CMatrix conjugated =
      hermitian_part(inv_root * rho0.matrix() * inv_root);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(conjugated,
                                                Eigen::EigenvaluesOnly);
  const double constant =
      solver.eigenvalues().cwiseAbs().maxCoeff() * lyapunov(filter0);

  const int p = cfg.p_list.front();
  const RateEstimate est = optimize_rate(ch, p, detail::rate_options(cfg));

  TrajectoryEnsemble ens;
  try {
    ens = ensemble(ch, rho0, filter0, cfg.steps, cfg.samples, cfg.seed,
                   cfg.threads);
  } catch (const SupportViolation& e) {
    throw ConfigError(e.what());
  }

  const std::uint64_t hash = config_hash(cfg);
  CsvBuilder table(hash, cfg.seed,
                   "step,mean_one_minus_fidelity,se_one_minus_fidelity,bound");
  bool holds = true;
  int worst_step = 0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= cfg.steps; ++k) {
    const double bound = constant * detail::bound_at(est.gamma_hat, k, p);
    const double mean = ens.mean_one_minus_fidelity(k);
    const double se = ens.se_one_minus_fidelity(k);
    const double gap = mean - (bound + 3.0 * se);
    if (gap > worst_gap) {
      worst_gap = gap;
      worst_step = k;
    }
    if (gap > 0.0) holds = false;
    table.row({std::to_string(k), format_double(mean), format_double(se),
               format_double(bound)});
  }

  std::string report = "# config_hash=" + hex64(hash) +
                       " seed=" + std::to_string(cfg.seed) + "\n";
  report += "C=" + format_double(constant) + "\n";
  report += "gamma_hat=" + format_double(est.gamma_hat) + "\n";
  report += "p=" + std::to_string(p) + "\n";
  report += std::string("bound_holds=") + (holds ? "true" : "false") + "\n";
  report += "worst_step=" + std::to_string(worst_step) + "\n";
  report += "worst_gap=" + format_double(worst_gap) + "\n";
  return {detail::emit(cfg, "stability.csv", table.str()),
          detail::emit(cfg, "stability_report.txt", report)};
}

/// 2D parameter sweep: best-found rate and the empirical decay rate per grid
/// point, raw and normalized (gamma_hat/(p tau) and gamma_emp/tau).
inline std::vector<std::filesystem::path> cmd_sweep(
    const ExperimentConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("sweep needs a 'sweep' block");
  const SweepSpec& sweep = *cfg.sweep;
  if (sweep.values1.empty() || sweep.values2.empty())
    throw ConfigError("sweep value lists must be nonempty");

  const std::uint64_t hash = config_hash(cfg);
  CsvBuilder table(hash, cfg.seed,
                   "param1,param2,gamma_hat,gamma_hat_normalized,gamma_emp,"
                   "gamma_emp_normalized");

  std::size_t point = 0;
  for (double v1 : sweep.values1) {
    for (double v2 : sweep.values2) {
      json model = cfg.model;
      model[sweep.param1] = v1;
      model[sweep.param2] = v2;
      const KrausChannel ch = build_model(model);
      const DensityMatrix rho0 = build_state(cfg.initial_state, ch.dim());
      const double tau = model_tau(model);

      const RateEstimate est =
          optimize_rate(ch, sweep.p, detail::rate_options(cfg));

      const TrajectoryEnsemble ens =
          ensemble(ch, rho0, std::nullopt, cfg.steps, cfg.samples,
                   derive_seed(cfg.seed, point), cfg.threads);
      const double v0 = lyapunov(rho0);
      const double scale = v0 > 0.0 ? 1.0 / v0 : 1.0;

      // Longest strictly positive stretch of the mean curve inside the window.
      const int begin = std::max(0, sweep.fit_begin);
      int end = sweep.fit_end > 0 ? std::min(sweep.fit_end, cfg.steps)
                                  : cfg.steps;
      int last = begin - 1;
      while (last + 1 <= end && ens.mean_lyapunov(last + 1) * scale > 0.0)
        ++last;
      double gamma_emp = std::numeric_limits<double>::quiet_NaN();
      if (last - begin >= 1) {
        RVector normalized = ens.mean_lyapunov * scale;
        gamma_emp = empirical_rate(normalized, begin, last).rate;
      }

      table.row({format_double(v1), format_double(v2),
                 format_double(est.gamma_hat),
                 format_double(est.gamma_hat / (sweep.p * tau)),
                 format_double(gamma_emp), format_double(gamma_emp / tau)});
      ++point;
    }
  }
  return {detail::emit(cfg, "sweep.csv", table.str())};
}

}  // namespace qtraj
