#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/loading.hpp"
#include "palign/oracle.hpp"
#include "palign/persona.hpp"
#include "palign/prompts.hpp"

namespace palign {

struct MStepConfig {
  double learning_rate = 0.05;
  int iterations = 200;
  double objective_tol = 1e-10;
};

struct TrainConfig {
  std::size_t L0 = 5;
  int max_iterations = 50;
  double convergence_tol = 1e-4;  // sup-norm on the change in beta
  double alpha_e = 0.5;
  double alpha_m = 0.4;
  double lambda = kDefaultLambda;
  MStepConfig m_step;
  std::uint64_t seed = 0;
  bool compute_exact_ll = false;
  int max_parallel = 1;

  void validate() const {
    if (L0 < 1) throw ConfigError("L0 must be >= 1");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (!(convergence_tol > 0)) throw ConfigError("convergence_tol must be > 0");
    if (alpha_e < 0 || alpha_e >= 1) throw ConfigError("alpha_e must be in [0,1)");
    if (alpha_m < 0) throw ConfigError("alpha_m must be >= 0");
    if (m_step.learning_rate <= 0) throw ConfigError("m-step learning rate must be > 0");
    if (m_step.iterations < 1) throw ConfigError("m-step iterations must be >= 1");
    if (max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
  }
};

struct EStepSample {
  std::size_t persona_index = 0;
  double loading_probability = 0.0;
  Alternative simulated = Alternative::Train;
  bool correct = false;
  double weight = 0.0;
};

struct EStepRecord {
  std::size_t record_index = 0;
  bool failed = false;
  std::vector<EStepSample> samples;
};

struct EStepOutput {
  std::vector<EStepRecord> records;
  std::size_t oracle_calls = 0;
  std::vector<std::string> errors;
  double alpha_e = 0.0;
  std::size_t L = 0;
};

// Samples L personas per record from the loading distribution, simulates the
// choice for each, and assigns the adjusted weights: the normalized positive
// contributions, down-weighted by (1 - alpha_e) when every sample is correct.
inline EStepOutput e_step(const EmbeddingParams& params,
                          const std::vector<ChoiceRecord>& general,
                          const PersonaBasis& basis, std::size_t L, ChoiceOracle& oracle,
                          double alpha_e, double lambda, std::uint64_t seed,
                          int max_parallel = 1) {
  if (L > basis.size()) {
    throw DataError("e_step: L=" + std::to_string(L) + " exceeds basis size " +
                    std::to_string(basis.size()));
  }
  EStepOutput out;
  out.alpha_e = alpha_e;
  out.L = L;
  out.records.resize(general.size());
  std::vector<std::string> errors(general.size());
  const std::size_t calls_before = oracle.calls();

  parallel_for(general.size(), max_parallel, [&](std::size_t i) {
    const auto& rec = general[i];
    EStepRecord row;
    row.record_index = i;
    const auto dist = loading_distribution(rec.demographics, params, basis, lambda);
    const auto picks = sample_personas(dist, L, derive_seed(seed, i));
    try {
      for (std::size_t l = 0; l < picks.size(); ++l) {
        const auto& persona = basis.personas[picks[l]];
        Prompt prompt = build_simulation_prompt(rec.demographics, rec.context, persona);
        prompt.metadata.record_id = std::to_string(i);
        EStepSample sample;
        sample.persona_index = picks[l];
        sample.loading_probability = dist.probabilities[picks[l]];
        sample.simulated = simulate_choice(oracle, prompt);
        sample.correct = sample.simulated == rec.chosen;
        row.samples.push_back(sample);
      }
    } catch (const OracleError& e) {
      row.failed = true;
      errors[i] = "record " + std::to_string(i) + ": " + e.what();
    }
    if (!row.failed) {
      double denom = 0.0;
      bool all_correct = true;
      for (const auto& s : row.samples) {
        if (s.correct) denom += s.loading_probability;
        all_correct = all_correct && s.correct;
      }
      if (denom > 0.0) {
        const double factor = all_correct ? (1.0 - alpha_e) : 1.0;
        EStepSample* largest = nullptr;
        for (auto& s : row.samples) {
          s.weight = s.correct ? factor * s.loading_probability / denom : 0.0;
          if (s.correct && (!largest || s.weight > largest->weight)) largest = &s;
        }
        // fold the rounding residue into the largest weight until the
        // left-to-right sum hits its regime value (0, 1-alpha_e or 1) exactly
        for (int pass = 0; largest && pass < 8; ++pass) {
          double sum = 0.0;
          for (const auto& s : row.samples) sum += s.weight;
          if (sum == factor) break;
          largest->weight += factor - sum;
        }
      }
    }
    out.records[i] = std::move(row);
  });

  out.oracle_calls = oracle.calls() - calls_before;
  for (auto& e : errors) {
    if (!e.empty()) out.errors.push_back(std::move(e));
  }
  return out;
}

struct LikelihoodSummary {
  std::vector<double> per_record;  // one entry per evaluated (non-failed) record
  double total_log = 0.0;          // over records with positive likelihood
  std::size_t zero_records = 0;
  std::size_t evaluated = 0;
};

// Simulated per-record likelihood: sum of loading probabilities of correct
// samples over the sum across all samples.
inline LikelihoodSummary simulated_likelihood(const EStepOutput& e_out) {
  LikelihoodSummary out;
  for (const auto& row : e_out.records) {
    if (row.failed) continue;
    double correct_mass = 0.0, total_mass = 0.0;
    for (const auto& s : row.samples) {
      total_mass += s.loading_probability;
      if (s.correct) correct_mass += s.loading_probability;
    }
    const double lik = total_mass > 0 ? correct_mass / total_mass : 0.0;
    out.per_record.push_back(lik);
    ++out.evaluated;
    if (lik > 0) {
      out.total_log += std::log(lik);
    } else {
      ++out.zero_records;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// M-step objective and analytic gradient

namespace detail {

struct RegularizerParts {
  std::array<double, 4> variance{};
  std::array<double, 4> mean{};
  double mean_variance = 0.0;
  double effective_mean = 0.0;  // floored
  double value = 0.0;
};

inline constexpr double kVarianceFloor = 1e-8;

inline RegularizerParts regularizer_parts(const EmbeddingParams& params) {
  RegularizerParts parts;
  for (std::size_t m = 0; m < 4; ++m) {
    const std::size_t n = kDemographicCardinalities[m];
    double mean = 0;
    for (std::size_t c = 0; c < n; ++c) mean += params.at(m, c);
    mean /= static_cast<double>(n);
    double var = 0;
    for (std::size_t c = 0; c < n; ++c) {
      const double d = params.at(m, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    parts.mean[m] = mean;
    parts.variance[m] = var;
    parts.mean_variance += var / 4.0;
  }
  parts.effective_mean = std::max(parts.mean_variance, kVarianceFloor);
  for (std::size_t m = 0; m < 4; ++m) {
    const double r = parts.variance[m] / parts.effective_mean - 1.0;
    parts.value += r * r;
  }
  return parts;
}

// Per-profile loading data reused across records sharing demographics.
struct ProfileLoading {
  EmbeddingVector e_i{};
  std::vector<double> sims;
  std::vector<double> probs;
};

struct LoadingWorkspace {
  std::vector<EmbeddingVector> basis_embeddings;
  std::map<std::array<std::size_t, 4>, ProfileLoading> by_profile;

  void reset(const PersonaBasis& basis, const EmbeddingParams& params) {
    basis_embeddings.clear();
    basis_embeddings.reserve(basis.size());
    for (std::size_t k = 0; k < basis.size(); ++k) {
      basis_embeddings.push_back(embed(basis.demographics_of(k), params));
    }
    by_profile.clear();
  }

  const ProfileLoading& loading_for(const SocioDemographics& d,
                                    const EmbeddingParams& params, double lambda) {
    const std::array<std::size_t, 4> key = {d.category(0), d.category(1), d.category(2),
                                            d.category(3)};
    auto it = by_profile.find(key);
    if (it != by_profile.end()) return it->second;
    ProfileLoading pl;
    pl.e_i = embed(d, params);
    pl.sims.resize(basis_embeddings.size());
    for (std::size_t k = 0; k < basis_embeddings.size(); ++k) {
      pl.sims[k] = cosine_similarity(pl.e_i, basis_embeddings[k]);
    }
    pl.probs = softmax_distribution(pl.sims, lambda).probabilities;
    return by_profile.emplace(key, std::move(pl)).first->second;
  }
};

// Scatters c * d s(e_i, e_k) / d beta into grad (flat, dim-major).
inline void scatter_similarity_gradient(const SocioDemographics& d_i,
                                        const SocioDemographics& d_k,
                                        const EmbeddingVector& e_i,
                                        const EmbeddingVector& e_k, double sim, double c,
                                        std::array<double, EmbeddingParams::kTotal>& grad) {
  const double ni = norm2(e_i);
  const double nk = norm2(e_k);
  const double inv_cross = 1.0 / (ni * nk);
  const double inv_ii = sim / (ni * ni);
  const double inv_kk = sim / (nk * nk);
  std::size_t offset = 0;
  for (std::size_t m = 0; m < 4; ++m) {
    const double di = e_k[m] * inv_cross - e_i[m] * inv_ii;
    const double dk = e_i[m] * inv_cross - e_k[m] * inv_kk;
    grad[offset + d_i.category(m)] += c * di;
    grad[offset + d_k.category(m)] += c * dk;
    offset += kDemographicCardinalities[m];
  }
}

}  // namespace detail

// Q(beta) = sum_i sum_l w_il log P(Z_l | d_i; beta) - alpha_m * L_reg(beta).
inline double m_step_objective(const EStepOutput& e_out,
                               const std::vector<ChoiceRecord>& general,
                               const PersonaBasis& basis, const EmbeddingParams& params,
                               double alpha_m, double lambda = kDefaultLambda) {
  detail::LoadingWorkspace ws;
  ws.reset(basis, params);
  double q = 0.0;
  for (const auto& row : e_out.records) {
    if (row.failed) continue;
    const auto& pl =
        ws.loading_for(general[row.record_index].demographics, params, lambda);
    for (const auto& s : row.samples) {
      if (s.weight > 0) q += s.weight * std::log(pl.probs[s.persona_index]);
    }
  }
  return q - alpha_m * detail::regularizer_parts(params).value;
}

inline std::array<double, EmbeddingParams::kTotal> m_step_gradient(
    const EStepOutput& e_out, const std::vector<ChoiceRecord>& general,
    const PersonaBasis& basis, const EmbeddingParams& params, double alpha_m,
    double lambda = kDefaultLambda) {
  std::array<double, EmbeddingParams::kTotal> grad{};
  detail::LoadingWorkspace ws;
  ws.reset(basis, params);

  for (const auto& row : e_out.records) {
    if (row.failed) continue;
    double weight_sum = 0.0;
    for (const auto& s : row.samples) weight_sum += s.weight;
    if (weight_sum <= 0.0) continue;

    const auto& d_i = general[row.record_index].demographics;
    const auto& pl = ws.loading_for(d_i, params, lambda);

    // lambda * [ sum_l w_il ds_il - (sum_l w_il) sum_k P_ik ds_ik ]
    for (const auto& s : row.samples) {
      if (s.weight <= 0) continue;
      detail::scatter_similarity_gradient(
          d_i, basis.demographics_of(s.persona_index), pl.e_i,
          ws.basis_embeddings[s.persona_index], pl.sims[s.persona_index],
          lambda * s.weight, grad);
    }
    for (std::size_t k = 0; k < basis.size(); ++k) {
      detail::scatter_similarity_gradient(d_i, basis.demographics_of(k), pl.e_i,
                                          ws.basis_embeddings[k], pl.sims[k],
                                          -lambda * weight_sum * pl.probs[k], grad);
    }
  }

  if (alpha_m > 0) {
    const auto parts = detail::regularizer_parts(params);
    const bool floored = parts.mean_variance < detail::kVarianceFloor;
    double weighted_ratio_sum = 0.0;  // sum_p r_p * variance_p
    std::array<double, 4> ratio{};
    for (std::size_t m = 0; m < 4; ++m) {
      ratio[m] = parts.variance[m] / parts.effective_mean - 1.0;
      weighted_ratio_sum += ratio[m] * parts.variance[m];
    }
    std::size_t offset = 0;
    for (std::size_t m = 0; m < 4; ++m) {
      const auto n = static_cast<double>(kDemographicCardinalities[m]);
      for (std::size_t c = 0; c < kDemographicCardinalities[m]; ++c) {
        const double dvar = 2.0 * (params.at(m, c) - parts.mean[m]) / n;
        double dreg = 2.0 * ratio[m] * dvar / parts.effective_mean;
        if (!floored) {
          dreg -= 2.0 * weighted_ratio_sum * (dvar / 4.0) /
                  (parts.effective_mean * parts.effective_mean);
        }
        grad[offset + c] -= alpha_m * dreg;
      }
      offset += kDemographicCardinalities[m];
    }
  }
  return grad;
}

inline double regularizer_value(const EmbeddingParams& params) {
  return detail::regularizer_parts(params).value;
}

struct MStepResult {
  EmbeddingParams params;
  double objective = 0.0;
  int iterations_used = 0;
};

// Full-batch gradient ascent from params_init; returns the best iterate seen
// (the initial point counts, so the objective never regresses).
inline MStepResult m_step(const EStepOutput& e_out, const std::vector<ChoiceRecord>& general,
                          const PersonaBasis& basis, const EmbeddingParams& params_init,
                          double alpha_m, const MStepConfig& config,
                          double lambda = kDefaultLambda) {
  bool any_weight = false;
  for (const auto& row : e_out.records) {
    for (const auto& s : row.samples) {
      if (s.weight > 0) any_weight = true;
    }
  }
  if (!any_weight) {
    throw EstimationError(
        "m_step: all E-step weights are zero; increase L or use a different seed");
  }

  EmbeddingParams current = params_init;
  MStepResult best;
  best.params = params_init;
  best.objective = m_step_objective(e_out, general, basis, params_init, alpha_m, lambda);
  double previous = best.objective;

  for (int it = 0; it < config.iterations; ++it) {
    const auto grad = m_step_gradient(e_out, general, basis, current, alpha_m, lambda);
    for (std::size_t i = 0; i < EmbeddingParams::kTotal; ++i) {
      current.flat(i) += config.learning_rate * grad[i];
    }
    const double objective =
        m_step_objective(e_out, general, basis, current, alpha_m, lambda);
    best.iterations_used = it + 1;
    if (objective > best.objective) {
      best.objective = objective;
      best.params = current;
    }
    if (std::abs(objective - previous) < config.objective_tol) break;
    previous = objective;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Exact (full-enumeration) log-likelihood

inline double exact_log_likelihood(const EmbeddingParams& params,
                                   const std::vector<ChoiceRecord>& general,
                                   const PersonaBasis& basis, ChoiceOracle& oracle,
                                   double lambda = kDefaultLambda, int max_parallel = 1,
                                   std::size_t* zero_records_out = nullptr) {
  if (!oracle.deterministic()) {
    throw ConfigError(
        "exact_log_likelihood requires a deterministic oracle or a replay-only cache");
  }
  std::vector<double> per_record(general.size(), 0.0);
  parallel_for(general.size(), max_parallel, [&](std::size_t i) {
    const auto& rec = general[i];
    const auto dist = loading_distribution(rec.demographics, params, basis, lambda);
    double lik = 0.0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      Prompt prompt = build_simulation_prompt(rec.demographics, rec.context,
                                              basis.personas[k]);
      prompt.metadata.record_id = std::to_string(i);
      if (simulate_choice(oracle, prompt) == rec.chosen) lik += dist.probabilities[k];
    }
    per_record[i] = lik;
  });

  double total = 0.0;
  std::size_t zeros = 0;
  for (double lik : per_record) {
    if (lik > 0) {
      total += std::log(lik);
    } else {
      ++zeros;
    }
  }
  if (zero_records_out) *zero_records_out = zeros;
  return total;
}

// ---------------------------------------------------------------------------
// Training loop (Monte-Carlo stochastic EM)

struct TrainIteration {
  int t = 0;
  std::size_t L = 0;
  double simulated_ll = 0.0;
  std::size_t zero_likelihood_records = 0;
  std::optional<double> exact_ll;
  double delta_beta_inf = 0.0;
  double m_objective = 0.0;
  std::size_t oracle_calls_cumulative = 0;
  bool stalled = false;
};

struct TrainResult {
  EmbeddingParams params;
  std::vector<TrainIteration> history;
  bool converged = false;
};

inline EmbeddingParams initial_params(std::uint64_t seed) {
  return random_params(derive_seed(seed, 0xb0115eedULL));
}

// Alg.: increment L (capped at the basis size), E-step, M-step, repeat until
// the sup-norm change in beta drops below convergence_tol.
inline TrainResult train(const DatasetBundle& bundle, const PersonaBasis& basis,
                         ChoiceOracle& oracle, const TrainConfig& config,
                         const EmbeddingParams* warm_start = nullptr,
                         int start_iteration = 0) {
  config.validate();
  if (bundle.general.empty()) throw DataError("train: empty general dataset");
  if (basis.size() == 0) throw DataError("train: empty persona basis");

  TrainResult result;
  result.params = warm_start ? *warm_start : initial_params(config.seed);
  std::size_t L =
      std::min(config.L0 + static_cast<std::size_t>(start_iteration), basis.size());
  int consecutive_stalls = 0;
  const std::size_t calls_at_start = oracle.calls();

  for (int t = start_iteration + 1; t <= config.max_iterations; ++t) {
    L = std::min(L + 1, basis.size());
    auto e_out = e_step(result.params, bundle.general, basis, L, oracle, config.alpha_e,
                        config.lambda, derive_seed(config.seed, 0xe57e9000ULL + static_cast<std::uint64_t>(t)),
                        config.max_parallel);
    const auto lik = simulated_likelihood(e_out);

    TrainIteration it;
    it.t = t;
    it.L = L;
    it.simulated_ll = lik.total_log;
    it.zero_likelihood_records = lik.zero_records;
    it.oracle_calls_cumulative = oracle.calls() - calls_at_start;

    bool any_weight = false;
    for (const auto& row : e_out.records) {
      for (const auto& s : row.samples) {
        if (s.weight > 0) any_weight = true;
      }
    }
    if (!any_weight) {
      ++consecutive_stalls;
      it.stalled = true;
      if (config.compute_exact_ll) {
        it.exact_ll = exact_log_likelihood(result.params, bundle.general, basis, oracle,
                                           config.lambda, config.max_parallel);
      }
      result.history.push_back(it);
      if (consecutive_stalls >= 3) {
        throw EstimationError("train: 3 consecutive stalled iterations (all weights "
                              "zero); increase L0 or use a different seed");
      }
      continue;
    }
    consecutive_stalls = 0;

    const auto m = m_step(e_out, bundle.general, basis, result.params, config.alpha_m,
                          config.m_step, config.lambda);
    double delta = 0.0;
    for (std::size_t i = 0; i < EmbeddingParams::kTotal; ++i) {
      delta = std::max(delta, std::abs(m.params.flat(i) - result.params.flat(i)));
    }
    result.params = m.params;
    it.delta_beta_inf = delta;
    it.m_objective = m.objective;
    if (config.compute_exact_ll) {
      it.exact_ll = exact_log_likelihood(result.params, bundle.general, basis, oracle,
                                         config.lambda, config.max_parallel);
    }
    it.oracle_calls_cumulative = oracle.calls() - calls_at_start;
    result.history.push_back(it);

    if (delta < config.convergence_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace palign
